#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "fluxldp/grid_path.hpp"
#include "fluxldp/jump_path.hpp"
#include "fluxldp/network.hpp"
#include "fluxldp/tilt.hpp"

namespace fluxldp {

/// log(dP_ζ/dP) = Σ_i ζ^{(r_i)}(t_i) − ∫₀ᵀ Σ_r k^{V,r}(C(t))(e^{ζ^{(r)}(t)} − 1) dt,
/// integrated in closed form on each constant-state segment.
double log_likelihood_ratio(const ReactionNetwork& net, const JumpPath& path, const TiltProtocol& tilt);

/// Deterministic test on a jump path.
class EventPredicate {
 public:
  using Test = std::function<bool(const JumpPath&)>;

  EventPredicate(std::string description, Test test, nlohmann::json spec = nullptr);

  bool operator()(const JumpPath& path) const { return test_(path); }
  const std::string& description() const { return description_; }
  const nlohmann::json& spec() const { return spec_; }

  static EventPredicate always();
  static EventPredicate never();
  /// lo ≤ number of r-firings in (0, T] ≤ hi.
  static EventPredicate flux_count_between(std::size_t r, std::int64_t lo, std::int64_t hi);
  /// a ≤ W^{V,r}(T) ≤ b, decided in exact count arithmetic.
  static EventPredicate flux_between(std::size_t r, double a, double b);
  /// lo ≤ n_y(T) ≤ hi.
  static EventPredicate species_count_between(const ReactionNetwork& net, std::size_t y, std::int64_t lo,
                                              std::int64_t hi);
  /// sup_t ‖(C, W)(t) − (c, w)(t)‖∞ ≤ radius against a piecewise-linear center; exact over all
  /// jump times and grid nodes.
  static EventPredicate tube(const ReactionNetwork& net, const GridPath& center, double radius);
  /// |G(path) − G(center)| < eps with G evaluated on the path sampled at the center's grid.
  static EventPredicate g_ball(const ReactionNetwork& net, const GridPath& center, const TiltProtocol& tilt,
                               double eps);

  /// Builds an event from its JSON spec; "tube" and "g_ball" use `center` (and `tilt`).
  static EventPredicate from_json(const nlohmann::json& spec, const ReactionNetwork& net,
                                  const GridPath* center = nullptr, const TiltProtocol* tilt = nullptr);

 private:
  std::string description_;
  Test test_;
  nlohmann::json spec_;
};

/// Sup-norm distance in (c, w) between a jump path and a piecewise-linear grid path on [0, T].
double tube_distance(const ReactionNetwork& net, const JumpPath& path, const GridPath& center);

struct EstimateReport {
  double p_hat = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  std::size_t replicas = 0;
  std::size_t hits = 0;
  /// log p̂ computed with a shifted sum, finite whenever some weight is positive.
  double log_p_hat = -std::numeric_limits<double>::infinity();
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

struct ImportanceOptions {
  int threads = 0;
  /// Replaces log_likelihood_ratio; used to inject faults in tests.
  std::function<double(const JumpPath&)> log_ratio;
};

/// Mean of 1_event · exp(−log_likelihood_ratio) over replicas simulated under the tilt.
EstimateReport importance_estimate(const ReactionNetwork& net, std::int64_t volume, std::span<const std::int64_t> n0,
                                   double horizon, const EventPredicate& event, const TiltProtocol& tilt,
                                   std::size_t replicas, std::uint64_t seed, const ImportanceOptions& options = {});

struct TransientOptions {
  /// Per-species count cap; one entry applies to every species. Empty means 4·max(n0) + 50.
  std::vector<std::int64_t> species_cap;
  bool track_fluxes = false;
  /// Per-reaction firing cap when tracking fluxes; empty means unbounded up to the state limit.
  std::vector<std::int64_t> flux_cap;
  /// Constant per-reaction multipliers of the propensities (tilted chains); empty means 1.
  RealVec rate_multipliers;
  std::size_t max_states = 200'000;
  double rel_tol = 1e-10;
  double truncation_threshold = 1e-8;
};

/// Distribution of the truncated chain at time T.
struct TransientDistribution {
  std::size_t num_species = 0;
  bool tracks_fluxes = false;
  std::vector<CountVec> states;  // species counts, then firing counts when tracked
  RealVec probability;
  double truncated_mass = 0.0;
  std::size_t poisson_terms = 0;

  /// Σ p over states satisfying the test.
  double mass(const std::function<bool(const CountVec&)>& test) const;

  /// CSV "n:<species>...,m:<reaction>...,probability".
  void write_csv(std::ostream& os, const ReactionNetwork& net) const;
};

/// Uniformization of the chain restricted to the capped state space. Transitions leaving it
/// are absorbed, and their mass is reported. Throws OracleError past max_states or when the
/// truncated mass exceeds the threshold.
TransientDistribution exact_transient(const ReactionNetwork& net, std::int64_t volume,
                                      std::span<const std::int64_t> n0, double horizon,
                                      const TransientOptions& options = {});

}  // namespace fluxldp
