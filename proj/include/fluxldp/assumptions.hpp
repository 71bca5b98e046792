#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluxldp/network.hpp"

namespace fluxldp {

/// A concrete point where a sampled rate condition is violated.
/// `parameter` is δ for superhomogeneity, the shift h for monotonicity, V for convergence.
struct AssumptionWitness {
  RealVec c;
  std::size_t reaction = 0;
  double parameter = 0.0;
  double observed = 0.0;  // left-hand side of the violated inequality
  double bound = 0.0;     // right-hand side
};

struct AssumptionCheck {
  std::string item;
  bool passed = true;
  std::string detail;
  std::vector<AssumptionWitness> witnesses;
};

struct AssumptionOptions {
  std::vector<std::int64_t> volumes{10, 100, 1000, 10000};
  /// Upper end of the sampled flux window [0, W]^ℛ; non-positive means 2·(1 + max c0).
  double flux_window = 0.0;
  /// Sample cap; beyond it a fixed-seed random subset of the grid is used.
  std::size_t max_points = 20000;
  std::size_t max_witnesses = 8;
};

/// Sampled evidence for the rate conditions on the window around 𝒮_ε(c0).
/// A pass is evidence on the sampled window, not a proof.
struct AssumptionReport {
  AssumptionCheck cutoff_below;      // (i)   k^{V,r} = 0 when n_y < −γ_y
  AssumptionCheck convergence;       // (ii)  V⁻¹k^{V} → k̄ uniformly on the window
  AssumptionCheck regularity;        // (iii)-(iv) k̄, ∇k̄ finite and bounded
  AssumptionCheck monotonicity;      // (v)
  AssumptionCheck superhomogeneity;  // (vi)  k̄(δc) ≥ δ^p k̄(c)
  int psi_exponent = 1;
  std::vector<double> convergence_gaps;  // sup gap per entry of AssumptionOptions::volumes
  double window_eps = 0.0;
  double window_flux = 0.0;
  std::size_t sample_points = 0;

  bool all_passed() const;
  nlohmann::json to_json() const;
};

AssumptionReport validate_assumptions(const ReactionNetwork& net, std::span<const double> c0, double eps,
                                      int grid, const AssumptionOptions& options = {});

/// A w ≥ 0 with ‖c − c0 − Γw‖∞ ≤ tol, or nullopt (also when c < −tol somewhere).
std::optional<RealVec> simplex_witness(const ReactionNetwork& net, std::span<const double> c0,
                                       std::span<const double> c, double tol = 1e-9);

bool simplex_contains(const ReactionNetwork& net, std::span<const double> c0, std::span<const double> c,
                      double tol = 1e-9);

}  // namespace fluxldp
