#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fluxldp/grid_path.hpp"
#include "fluxldp/jump_path.hpp"
#include "fluxldp/network.hpp"
#include "fluxldp/tilt.hpp"
#include "fluxldp/tilting.hpp"

namespace fluxldp {

/// Tolerance overrides.
struct Tolerances {
  double continuity = 1e-9;
  double simplex = 1e-9;
  double oracle_rel = 1e-10;
  double truncation = 1e-8;
};

/// Resolved experiment description; mirrors the JSON config file field by field.
struct ExperimentConfig {
  std::string network_source;  // file path, or "inline"
  ReactionNetwork network{{"X"}, {Reaction{{0}, {1}, {}, ConstantRate{1.0}}}};
  RealVec c0;
  std::vector<std::int64_t> volumes;
  double horizon = 1.0;
  std::size_t steps = 1000;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  nlohmann::json tilt_spec = nullptr;   // null means ζ ≡ 0
  nlohmann::json event_spec = nullptr;  // null means the command's default event
  std::filesystem::path out = "out";
  Tolerances tolerances;
  double tube_radius = 0.05;
  double tilt_cap = 40.0;
  double eps = 0.1;     // assumption window radius
  int grid = 5;         // assumption sample resolution
  std::string input;    // optional path file for `rate`
  std::int64_t species_cap = 0;  // exact oracle cap, 0 = automatic
  int threads = 0;      // excluded from emitted files

  /// Parses and validates; relative paths resolve against `base_dir`. Errors name the field.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
  static ExperimentConfig load(const std::filesystem::path& file);

  /// The resolved config embedded in every output (threads omitted).
  nlohmann::json to_json() const;

  TiltProtocol tilt() const;

  /// V·c0 rounded; throws ValidationError unless it is an integer vector.
  CountVec initial_counts(std::int64_t volume) const;
};

/// Tilt specs: {"kind":"zero"}, {"kind":"constant","values":[…]}, {"kind":"species","xi":[…]},
/// {"kind":"grid","zeta":[[…]…]}; optional "cutoff": δ multiplies by the ramp η_δ.
TiltProtocol tilt_from_spec(const nlohmann::json& spec, const ReactionNetwork& net, double horizon,
                            std::size_t steps);

nlohmann::json cmd_simulate(const ExperimentConfig& cfg);
nlohmann::json cmd_fluid(const ExperimentConfig& cfg);
nlohmann::json cmd_rate(const ExperimentConfig& cfg);
nlohmann::json cmd_tilt(const ExperimentConfig& cfg);
nlohmann::json cmd_lln(const ExperimentConfig& cfg);
nlohmann::json cmd_ldp_slope(const ExperimentConfig& cfg);
nlohmann::json cmd_girsanov(const ExperimentConfig& cfg);
/// Assumption report, plus read-back of every emitted file in the output directory.
nlohmann::json cmd_validate(const ExperimentConfig& cfg);

/// Re-reads an emitted file and checks the invariants of the type it holds; returns a
/// one-line description or throws ValidationError.
std::string validate_output_file(const std::filesystem::path& file);

/// Writes meta.json (timestamp, argv) next to the outputs.
void write_metadata(const std::filesystem::path& out, const std::vector<std::string>& argv);

struct SlopeEntry {
  std::int64_t volume = 0;
  EstimateReport estimate;
  double rate = 0.0;  // −(1/V) log p̂
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> exact_rate;
  std::optional<double> exact_probability;
};

struct SlopeReport {
  std::vector<SlopeEntry> entries;
  double j_ref = 0.0;
  /// J of the scaled tilt s·ζ with the smallest s whose solution stays inside the tube.
  double tube_proxy = 0.0;
  double tube_proxy_scale = 1.0;
  double asymptote = 0.0;  // intercept a of rate(V) ≈ a + b/V
  double relative_gap = 0.0;
  double relative_gap_proxy = 0.0;
  bool monotone_trend = false;
  std::string event;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

struct SlopeOptions {
  bool exact = true;  // add uniformization columns for endpoint events when feasible
  std::size_t max_exact_states = 200'000;
};

/// Center = solve_perturbed(ζ); estimates p(V) of the event (default: sup-norm tube of radius ρ
/// around the center) by importance sampling under ζ.
SlopeReport ldp_slope_experiment(const ExperimentConfig& cfg, const SlopeOptions& options = {});

struct GirsanovEvent {
  std::string description;
  double exact = 0.0;
  EstimateReport estimate;
  double z_score = 0.0;
  bool passed = false;
};

struct GirsanovReport {
  std::vector<GirsanovEvent> events;
  std::size_t oracle_states = 0;
  double truncated_mass = 0.0;
  bool passed = false;

  nlohmann::json to_json() const;
};

struct GirsanovOptions {
  double z_threshold = 3.0;
  /// Replaces log_likelihood_ratio, for mutation tests.
  std::function<double(const JumpPath&)> log_ratio;
};

/// Compares importance-sampled endpoint-count probabilities under the tilt with the exact
/// transient law of the untilted chain, for five events at the oracle's quantiles.
GirsanovReport girsanov_check(const ExperimentConfig& cfg, const GirsanovOptions& options = {});

}  // namespace fluxldp
