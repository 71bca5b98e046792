#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace fluxldp {

using RealVec = std::vector<double>;
using CountVec = std::vector<std::int64_t>;

/// k̄(c) = κ ∏_y c_y^{α_y}; microscopically κ V ∏_y n_y(n_y−1)⋯(n_y−α_y+1) / V^{α_y}.
struct MassAction {
  double kappa = 0.0;
};

/// k̄(c) = κ independent of c; microscopic propensity κV.
struct ConstantRate {
  double kappa = 0.0;
};

/// User-supplied kinetics. Not representable in the DSL or JSON.
/// When `micro` is empty the propensity defaults to V·macro(n/V).
struct CustomKinetics {
  std::string name;
  std::function<double(std::span<const double> c)> macro;
  std::function<double(std::int64_t volume, std::span<const std::int64_t> n)> micro;
};

using Kinetics = std::variant<MassAction, ConstantRate, CustomKinetics>;

struct Reaction {
  std::vector<int> alpha;  // reactant complex
  std::vector<int> beta;   // product complex
  std::vector<int> gamma;  // beta - alpha
  Kinetics kinetics;

  int total_order() const;
};

/// Species and reactions with stoichiometry. Immutable once constructed.
class ReactionNetwork {
 public:
  /// `reactions` carry alpha/beta over `species`; gamma is recomputed.
  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions);

  const std::vector<std::string>& species() const { return species_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  std::size_t num_species() const { return species_.size(); }
  std::size_t num_reactions() const { return reactions_.size(); }
  const Reaction& reaction(std::size_t r) const { return reactions_[r]; }

  /// Index of a species; throws ValidationError when unknown.
  std::size_t species_index(std::string_view name) const;

  /// Γ entry γ^{(r)}_y.
  int gamma(std::size_t y, std::size_t r) const { return reactions_[r].gamma[y]; }

  /// max_r Σ_y α^{(r)}_y.
  int max_total_order() const;

  /// True when every reaction uses mass-action or constant kinetics.
  bool is_serializable() const;

  /// c0 + Γw.
  RealVec apply_stoichiometry(std::span<const double> c0, std::span<const double> w) const;

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
};

bool operator==(const Reaction& a, const Reaction& b);
bool operator==(const ReactionNetwork& a, const ReactionNetwork& b);

/// Parses the line-oriented network DSL:
///
///   species A B C            (optional; when present, reactions may only use these)
///   2 H2 + O2 -> 2 H2O @ ma(0.3)
///   0 -> A @ const(1.0); A -> 0 @ ma(2.0)   # comment
ReactionNetwork parse_network(std::string_view text);

/// Canonical DSL form; parse_network(render_network(n)) == n.
std::string render_network(const ReactionNetwork& net);

nlohmann::json network_to_json(const ReactionNetwork& net);
ReactionNetwork network_from_json(const nlohmann::json& j);

/// Reads a network either as DSL text or as JSON (detected by a leading '{').
ReactionNetwork load_network_file(const std::string& path);

/// Macroscopic rates k̄(c). Throws ValidationError on a negative or wrongly sized c.
RealVec macro_rate(const ReactionNetwork& net, std::span<const double> c);

/// Microscopic propensities k^{V,r}(n/V) from molecule counts n.
RealVec micro_propensity(const ReactionNetwork& net, std::int64_t volume,
                         std::span<const std::int64_t> n);

/// Single-reaction variants used on hot paths.
double macro_rate(const Reaction& reaction, std::span<const double> c);
double micro_propensity(const Reaction& reaction, std::int64_t volume,
                        std::span<const std::int64_t> n);

}  // namespace fluxldp
