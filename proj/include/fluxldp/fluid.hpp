#pragma once

#include <cstdint>
#include <optional>

#include "fluxldp/grid_path.hpp"
#include "fluxldp/network.hpp"
#include "fluxldp/tilt.hpp"

namespace fluxldp {

/// Fixed-step RK4 for ẇ = k̄(c), c = c0 + Γw, on `steps` uniform cells.
GridPath solve_rre(const ReactionNetwork& net, std::span<const double> c0, double horizon, std::size_t steps);

/// Same scheme for ẇ^{(r)} = k̄^{(r)}(c)·exp(ζ^{(r)}(t)). A zero tilt reproduces solve_rre exactly.
GridPath solve_perturbed(const ReactionNetwork& net, std::span<const double> c0, const TiltProtocol& tilt,
                         double horizon, std::size_t steps);

struct LlnOptions {
  std::size_t steps = 1000;
  int threads = 0;
  const TiltProtocol* tilt = nullptr;
};

struct LlnStats {
  std::int64_t volume = 0;
  std::vector<double> gaps;  // per replica, in replica order
  double mean = 0.0;
  double median = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
  double max = 0.0;

  nlohmann::json to_json() const;
};

/// sup_k ‖(C^V, W^V)(t_k) − (c, w)(t_k)‖∞ over the fluid grid, per replica.
/// Replica i uses RNG stream i of `seed`.
LlnStats lln_gap(const ReactionNetwork& net, std::int64_t volume, std::span<const double> c0, double horizon,
                 std::size_t replicas, std::uint64_t seed, const LlnOptions& options = {});

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace fluxldp
