#pragma once

#include <optional>
#include <vector>

#include "fluxldp/network.hpp"

namespace fluxldp {

/// Per-reaction tilt ζ(t) ∈ ℝ^ℛ on a uniform grid over [0, T], linear between nodes.
/// The tilted propensity of reaction r is k^{V,r}·exp(ζ^{(r)}(t)).
class TiltProtocol {
 public:
  /// `nodes[k][r]` is ζ^{(r)}(kT/K) with K = nodes.size() − 1 ≥ 1.
  TiltProtocol(double horizon, std::vector<RealVec> nodes);

  static TiltProtocol zero(std::size_t num_reactions, double horizon);
  static TiltProtocol constant(RealVec values, double horizon);

  /// ζ^{(r)} = ξ·γ^{(r)} from a species potential ξ given on the grid, `xi[k][y]`.
  static TiltProtocol from_species_potential(const ReactionNetwork& net, double horizon,
                                             const std::vector<RealVec>& xi);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return nodes_.size() - 1; }
  std::size_t num_reactions() const { return nodes_.front().size(); }
  double node_time(std::size_t k) const;
  const std::vector<RealVec>& nodes() const { return nodes_; }

  double value(double t, std::size_t r) const;
  RealVec values(double t) const;

  /// max_{s ∈ [t, T]} ζ^{(r)}(s).
  double max_after(double t, std::size_t r) const;

  /// ∫_a^b (exp(ζ^{(r)}(s)) − 1) ds in closed form, 0 ≤ a ≤ b ≤ T.
  double integral_expm1(std::size_t r, double a, double b) const;

  /// ∫_a^b ζ^{(r)}(s) ds in closed form.
  double integral(std::size_t r, double a, double b) const;

  bool is_zero() const;
  bool is_constant() const;

  /// Records that ζ ≡ 0 on [0, δ] ∪ [T − δ, T]; throws ValidationError when false.
  void set_support_margin(double delta);
  std::optional<double> support_margin() const { return margin_; }

  /// True when ζ vanishes (≤ tol) on [0, δ] ∪ [T − δ, T].
  bool vanishes_near_ends(double delta, double tol = 0.0) const;

  TiltProtocol scaled(double factor) const;

  nlohmann::json to_json() const;
  static TiltProtocol from_json(const nlohmann::json& j);

 private:
  void locate(double t, std::size_t& k, double& frac) const;

  double horizon_;
  std::vector<RealVec> nodes_;
  std::vector<RealVec> suffix_max_;  // suffix_max_[k][r] = max_{j ≥ k} nodes_[j][r]
  std::optional<double> margin_;
};

}  // namespace fluxldp
