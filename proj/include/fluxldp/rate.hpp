#pragma once

#include <optional>
#include <string>

#include "fluxldp/grid_path.hpp"
#include "fluxldp/network.hpp"
#include "fluxldp/tilt.hpp"

namespace fluxldp {

/// s(j | ĵ) = j log(j/ĵ) − j + ĵ, with s(0 | ĵ) = ĵ and s(j | 0) = +∞ for j > 0.
double rel_entropy(double j, double jhat);

/// H(c, ζ) = Σ_r k̄^{(r)}(c)(e^{ζ^{(r)}} − 1).
double hamiltonian(const ReactionNetwork& net, std::span<const double> c, std::span<const double> zeta);

inline constexpr const char* kContinuityViolation = "continuity violation";
inline constexpr const char* kNegativeFlux = "negative flux";
inline constexpr const char* kAbsoluteContinuity = "absolute-continuity failure";

struct RateReport {
  double value = 0.0;  // +∞ when infinity_reason is set
  RealVec breakdown;   // per-reaction ∫ s(ẇ^{(r)} | k̄^{(r)}(c)) dt
  std::optional<std::string> infinity_reason;
  std::string detail;

  bool finite() const { return !infinity_reason.has_value(); }
  nlohmann::json to_json() const;
};

/// Trapezoidal quadrature of Σ_r s(ẇ^{(r)} | k̄^{(r)}(c)) with centered ẇ.
RateReport evaluate_J(const ReactionNetwork& net, const GridPath& path, double tol = 1e-9);

/// Trapezoidal quadrature of ζ·ẇ − H(c, ζ); the tilt is evaluated at the path's grid times.
double evaluate_G(const ReactionNetwork& net, const GridPath& path, const TiltProtocol& tilt);

/// Four-case pointwise maximiser: log(ẇ/k̄) ∧ n, −n when ẇ = 0 < k̄, n when k̄ = 0 < ẇ, 0 when both vanish.
TiltProtocol optimal_tilt(const ReactionNetwork& net, const GridPath& path, double cap);

struct ContractionParams {
  int max_iterations = 100;
  double gradient_tol = 1e-10;
  double feasibility_tol = 1e-9;
  double armijo = 1e-4;
};

/// Solution of inf { Σ_r s(j^{(r)} | k̄^{(r)}(c)) : Γj = ċ, j ≥ 0 } at one point.
struct CellSolution {
  double value = 0.0;       // primal value, +∞ when infeasible
  double dual_value = 0.0;  // ξ·ċ − H(c, Γᵀξ)
  RealVec xi;
  RealVec j;
  double residual = 0.0;  // ‖Γj − ċ‖∞
  int iterations = 0;
  std::optional<std::string> infinity_reason;
};

CellSolution contraction_cell(const ReactionNetwork& net, std::span<const double> c, std::span<const double> cdot,
                              const ContractionParams& params = {});

struct ContractionResult {
  double value = 0.0;
  std::optional<std::string> infinity_reason;
  GridPath minimizer;  // input concentrations with w integrated from the optimal fluxes
  std::vector<double> node_cost;
  double max_residual = 0.0;
  double max_duality_gap = 0.0;
  int max_iterations_used = 0;

  nlohmann::json to_json() const;
};

/// 𝓘(c) = inf_w 𝒥(c, w) on a concentration path, node by node with centered ċ.
/// Only the c component of `cpath` is used.
ContractionResult contraction_I(const ReactionNetwork& net, const GridPath& cpath, const ContractionParams& params = {});

}  // namespace fluxldp
