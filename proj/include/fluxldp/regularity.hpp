#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluxldp/grid_path.hpp"
#include "fluxldp/network.hpp"
#include "fluxldp/tilt.hpp"

namespace fluxldp {

/// ĉ = Σ_r ĉ^{(r)} where ĉ^{(r)} is the first of 0, M·e_y, M·𝟙_{supp α^{(r)}} (M = 1, 10, 100)
/// with k̄^{(r)}(ĉ^{(r)}) > 0. Throws ValidationError when some reaction has no witness.
RealVec lift_witness(const ReactionNetwork& net);

/// ψ(δ)·min_r k̄^{(r)}(ĉ) with ψ(δ) = δ^p, p = max(1, max total order).
double lift_rate_bound(const ReactionNetwork& net, std::span<const double> chat, double delta);

/// c_δ = δĉ + (1 − δ)c, w_δ = (1 − δ)w. An empty `chat` selects lift_witness(net).
GridPath approx_lift(const ReactionNetwork& net, const GridPath& path, double delta, RealVec chat = {});

/// Convolution of (c, w) with the heat kernel of variance δ on the grid, extending the path
/// constantly outside [0, T]; w is shifted so that w_δ(0) = 0.
GridPath approx_mollify(const GridPath& path, double delta);

/// w_δ = (1 − δ)w + δt and c_δ = (1 − δ)c + δ Σ_r [(T − t)α^{(r)} + tβ^{(r)}].
GridPath approx_floor(const ReactionNetwork& net, const GridPath& path, double delta);

/// C¹ ramp: 0 on [0, δ] ∪ [T − δ, T], 1 on [2δ, T − 2δ], cubic smoothstep in between.
double cutoff_ramp(double t, double horizon, double delta);

struct CutoffResult {
  GridPath path;
  TiltProtocol tilt;  // ζ_δ = η_δ·log(ẇ/k̄(c)) on the path grid
};

/// Re-solves the perturbed equation from c(0) with ζ_δ. Requires ẇ > 0, k̄(c) > 0 and T > 4δ.
CutoffResult approx_cutoff_with_tilt(const ReactionNetwork& net, const GridPath& path, double delta);
GridPath approx_cutoff(const ReactionNetwork& net, const GridPath& path, double delta);

struct AdmissibilityReport {
  bool rates_bounded_below = false;
  bool flux_bounded_below = false;
  bool tilt_bounded = false;
  bool tilt_compact_support = false;
  double min_rate = 0.0;
  double min_flux = 0.0;
  double max_abs_tilt = 0.0;
  double max_tilt_slope = 0.0;
  double support_margin = 0.0;
  /// max |log(ẇ/k̄(c)) − ζ_δ| over the grid when the tilt comes from the cutoff stage.
  double tilt_consistency = 0.0;
  bool path_valid = false;  // w(0) = 0, w nondecreasing, c ≥ 0, continuity within tolerance
  std::vector<std::string> notes;

  bool member() const { return rates_bounded_below && flux_bounded_below && tilt_bounded && tilt_compact_support; }
  nlohmann::json to_json() const;
};

/// Flags of the admissible class on a grid path. With `tilt`, boundedness and support are read
/// from it; otherwise ζ = log(ẇ/k̄(c)) is formed from centered differences and must vanish
/// within `support_tol` on the margins.
AdmissibilityReport assess_admissibility(const ReactionNetwork& net, const GridPath& path, double margin,
                                         const TiltProtocol* tilt = nullptr, double tol = 1e-9,
                                         double support_tol = 1e-6);

struct RegularizeOptions {
  bool lift = true;
  bool mollify = true;
  bool floor = true;
  bool cutoff = true;
  RealVec chat;  // lift witness; empty selects lift_witness
};

struct RegularizeResult {
  GridPath path;
  std::optional<TiltProtocol> tilt;
  AdmissibilityReport report;
};

/// lift → mollify → floor → cutoff with a shared δ. A stage whose precondition fails after an
/// earlier stage was skipped is recorded in the report instead of throwing.
RegularizeResult regularize_to_admissible(const ReactionNetwork& net, const GridPath& path, double delta,
                                          const RegularizeOptions& options = {});

}  // namespace fluxldp
