#include "fluxldp/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fluxldp/errors.hpp"
#include "fluxldp/fluid.hpp"
#include "fluxldp/rate.hpp"

namespace fluxldp {

namespace {

void check_delta_open_unit(double delta, const char* who) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError(std::string(who) + ": delta must lie in (0, 1)");
}

void check_dims(const ReactionNetwork& net, const GridPath& path) {
  path.validate_shape();
  if (path.num_species() != net.num_species() || path.num_reactions() != net.num_reactions()) {
    throw ValidationError("regularity: path dimensions do not match the network");
  }
}

GridPath with_stoichiometry(const ReactionNetwork& net, double T, const RealVec& c0, std::vector<RealVec> w) {
  std::vector<RealVec> c(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) c[k] = net.apply_stoichiometry(c0, w[k]);
  return GridPath(T, std::move(c), std::move(w));
}

RealVec clamp_nonnegative(RealVec c) {
  for (double& x : c) x = std::max(x, 0.0);
  return c;
}

}  // namespace

RealVec lift_witness(const ReactionNetwork& net) {
  const std::size_t ny = net.num_species();
  RealVec chat(ny, 0.0);
  for (std::size_t r = 0; r < net.num_reactions(); ++r) {
    const Reaction& rx = net.reaction(r);
    std::vector<RealVec> candidates{RealVec(ny, 0.0)};
    for (double m : {1.0, 10.0, 100.0}) {
      for (std::size_t y = 0; y < ny; ++y) {
        RealVec c(ny, 0.0);
        c[y] = m;
        candidates.push_back(std::move(c));
      }
    }
    for (double m : {1.0, 10.0, 100.0}) {
      RealVec c(ny, 0.0);
      for (std::size_t y = 0; y < ny; ++y) c[y] = rx.alpha[y] > 0 ? m : 0.0;
      candidates.push_back(std::move(c));
    }
    bool found = false;
    for (const auto& c : candidates) {
      if (macro_rate(rx, c) > 0.0) {
        for (std::size_t y = 0; y < ny; ++y) chat[y] += c[y];
        found = true;
        break;
      }
    }
    if (!found) throw ValidationError("approx_lift: no positive-rate witness found for reaction " + std::to_string(r));
  }
  return chat;
}

double lift_rate_bound(const ReactionNetwork& net, std::span<const double> chat, double delta) {
  double kmin = std::numeric_limits<double>::infinity();
  for (const double k : macro_rate(net, chat)) kmin = std::min(kmin, k);
  return std::pow(delta, std::max(1, net.max_total_order())) * kmin;
}

GridPath approx_lift(const ReactionNetwork& net, const GridPath& path, double delta, RealVec chat) {
  check_delta_open_unit(delta, "approx_lift");
  check_dims(net, path);
  if (chat.empty()) chat = lift_witness(net);
  if (chat.size() != net.num_species()) throw ValidationError("approx_lift: witness has wrong length");
  for (const double k : macro_rate(net, chat)) {
    if (!(k > 0.0)) throw ValidationError("approx_lift: witness does not give every reaction a positive rate");
  }
  RealVec c0(net.num_species());
  for (std::size_t y = 0; y < c0.size(); ++y) c0[y] = delta * chat[y] + (1.0 - delta) * path.c[0][y];
  std::vector<RealVec> w = path.w;
  for (auto& row : w) {
    for (double& x : row) x *= 1.0 - delta;
  }
  GridPath out = with_stoichiometry(net, path.horizon, c0, std::move(w));
  out.warnings = path.warnings;
  return out;
}

GridPath approx_mollify(const GridPath& path, double delta) {
  if (!(delta > 0.0)) throw ValidationError("approx_mollify: delta must be positive");
  path.validate_shape();
  const double h = path.dt();
  const double sigma = std::sqrt(delta);
  const auto half = static_cast<std::ptrdiff_t>(std::floor(8.0 * sigma / h));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double mass = 0.0;
  for (std::ptrdiff_t j = -half; j <= half; ++j) {
    const double s = static_cast<double>(j) * h;
    const double v = std::exp(-s * s / (2.0 * delta));
    kernel[static_cast<std::size_t>(j + half)] = v;
    mass += v;
  }
  for (double& v : kernel) v /= mass;

  const auto K = static_cast<std::ptrdiff_t>(path.steps());
  auto convolve = [&](const std::vector<RealVec>& x) {
    std::vector<RealVec> out(x.size(), RealVec(x.front().size(), 0.0));
    for (std::ptrdiff_t k = 0; k <= K; ++k) {
      auto& row = out[static_cast<std::size_t>(k)];
      for (std::ptrdiff_t j = -half; j <= half; ++j) {
        const std::ptrdiff_t idx = std::clamp<std::ptrdiff_t>(k - j, 0, K);
        const double wt = kernel[static_cast<std::size_t>(j + half)];
        const auto& src = x[static_cast<std::size_t>(idx)];
        for (std::size_t i = 0; i < row.size(); ++i) row[i] += wt * src[i];
      }
    }
    return out;
  };
  std::vector<RealVec> c = convolve(path.c);
  std::vector<RealVec> w = convolve(path.w);
  const RealVec w0 = w.front();
  for (auto& row : w) {
    for (std::size_t r = 0; r < row.size(); ++r) row[r] -= w0[r];
  }
  GridPath out(path.horizon, std::move(c), std::move(w));
  out.warnings = path.warnings;
  return out;
}

GridPath approx_floor(const ReactionNetwork& net, const GridPath& path, double delta) {
  check_delta_open_unit(delta, "approx_floor");
  check_dims(net, path);
  const double T = path.horizon;
  RealVec c0(net.num_species());
  for (std::size_t y = 0; y < c0.size(); ++y) {
    double reactants = 0.0;
    for (std::size_t r = 0; r < net.num_reactions(); ++r) reactants += net.reaction(r).alpha[y];
    c0[y] = (1.0 - delta) * path.c[0][y] + delta * T * reactants;
  }
  std::vector<RealVec> w = path.w;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double t = path.time(k);
    for (double& x : w[k]) x = (1.0 - delta) * x + delta * t;
  }
  GridPath out = with_stoichiometry(net, T, c0, std::move(w));
  out.warnings = path.warnings;
  return out;
}

double cutoff_ramp(double t, double horizon, double delta) {
  const double d = std::min(t, horizon - t);
  if (d <= delta) return 0.0;
  if (d >= 2.0 * delta) return 1.0;
  const double x = (d - delta) / delta;
  return x * x * (3.0 - 2.0 * x);
}

CutoffResult approx_cutoff_with_tilt(const ReactionNetwork& net, const GridPath& path, double delta) {
  check_dims(net, path);
  if (!(delta > 0.0) || !(4.0 * delta < path.horizon)) {
    throw ValidationError("approx_cutoff: need 0 < 4*delta < T");
  }
  const std::size_t nr = net.num_reactions();
  std::vector<RealVec> zeta(path.num_nodes(), RealVec(nr));
  for (std::size_t k = 0; k < path.num_nodes(); ++k) {
    const RealVec c = clamp_nonnegative(path.c[k]);
    const RealVec wdot = path.centered_rate(k);
    // Linear interpolation between nodes must keep ζ_δ ≡ 0 on the margins, so a node whose
    // left or right neighbour lies inside a margin is zeroed as well.
    const double t = path.time(k), h = path.dt(), guard = 1e-12 * path.horizon;
    const bool near_end = t - h < delta - guard || path.horizon - t - h < delta - guard;
    const double eta = near_end ? 0.0 : cutoff_ramp(t, path.horizon, delta);
    for (std::size_t r = 0; r < nr; ++r) {
      const double k_bar = macro_rate(net.reaction(r), c);
      if (!(wdot[r] > 0.0) || !(k_bar > 0.0)) {
        std::ostringstream os;
        os << "approx_cutoff: nonpositive " << (wdot[r] > 0.0 ? "rate" : "flux") << " at t=" << path.time(k)
           << ", reaction " << r;
        throw ValidationError(os.str());
      }
      zeta[k][r] = eta == 0.0 ? 0.0 : eta * std::log(wdot[r] / k_bar);
    }
  }
  TiltProtocol tilt(path.horizon, std::move(zeta));
  tilt.set_support_margin(delta);
  GridPath out = solve_perturbed(net, path.c.front(), tilt, path.horizon, path.steps());
  return {std::move(out), std::move(tilt)};
}

GridPath approx_cutoff(const ReactionNetwork& net, const GridPath& path, double delta) {
  return approx_cutoff_with_tilt(net, path, delta).path;
}

nlohmann::json AdmissibilityReport::to_json() const {
  return {{"rates_bounded_below", rates_bounded_below},
          {"flux_bounded_below", flux_bounded_below},
          {"tilt_bounded", tilt_bounded},
          {"tilt_compact_support", tilt_compact_support},
          {"member", member()},
          {"min_rate", min_rate},
          {"min_flux", min_flux},
          {"max_abs_tilt", std::isfinite(max_abs_tilt) ? nlohmann::json(max_abs_tilt) : nlohmann::json("inf")},
          {"max_tilt_slope", std::isfinite(max_tilt_slope) ? nlohmann::json(max_tilt_slope) : nlohmann::json("inf")},
          {"support_margin", support_margin},
          {"tilt_consistency", std::isfinite(tilt_consistency) ? nlohmann::json(tilt_consistency) : nlohmann::json("inf")},
          {"path_valid", path_valid},
          {"notes", notes}};
}

AdmissibilityReport assess_admissibility(const ReactionNetwork& net, const GridPath& path, double margin,
                                         const TiltProtocol* tilt, double tol, double support_tol) {
  check_dims(net, path);
  AdmissibilityReport rep;
  rep.support_margin = margin;
  const std::size_t nr = net.num_reactions();
  const std::size_t K = path.steps();
  const double inf = std::numeric_limits<double>::infinity();

  bool valid = path.continuity_residual(net) <= tol;
  for (double x : path.w.front()) valid = valid && std::abs(x) <= tol;
  for (std::size_t k = 0; k <= K; ++k) {
    for (double x : path.c[k]) valid = valid && x >= -tol;
    if (k < K) {
      for (std::size_t r = 0; r < nr; ++r) valid = valid && path.w[k + 1][r] >= path.w[k][r] - tol;
    }
  }
  rep.path_valid = valid;

  std::vector<RealVec> numeric(K + 1, RealVec(nr));
  rep.min_rate = inf;
  rep.min_flux = inf;
  for (std::size_t k = 0; k <= K; ++k) {
    const RealVec c = clamp_nonnegative(path.c[k]);
    const RealVec wdot = path.centered_rate(k);
    for (std::size_t r = 0; r < nr; ++r) {
      const double k_bar = macro_rate(net.reaction(r), c);
      rep.min_rate = std::min(rep.min_rate, k_bar);
      rep.min_flux = std::min(rep.min_flux, wdot[r]);
      numeric[k][r] = (wdot[r] > 0.0 && k_bar > 0.0) ? std::log(wdot[r] / k_bar) : inf;
    }
  }
  rep.rates_bounded_below = rep.min_rate > 0.0;
  rep.flux_bounded_below = rep.min_flux > 0.0;

  const std::vector<RealVec>& zeta = tilt ? tilt->nodes() : numeric;
  if (tilt && tilt->steps() != K) throw ValidationError("assess_admissibility: tilt grid differs from the path grid");
  const double h = path.dt();
  bool finite = true;
  for (std::size_t k = 0; k <= K; ++k) {
    for (std::size_t r = 0; r < nr; ++r) {
      const double z = zeta[k][r];
      if (!std::isfinite(z)) {
        finite = false;
        continue;
      }
      rep.max_abs_tilt = std::max(rep.max_abs_tilt, std::abs(z));
      if (k < K && std::isfinite(zeta[k + 1][r])) {
        rep.max_tilt_slope = std::max(rep.max_tilt_slope, std::abs(zeta[k + 1][r] - z) / h);
      }
      if (tilt) {
        const double d = numeric[k][r] - z;
        rep.tilt_consistency = std::max(rep.tilt_consistency, std::isfinite(d) ? std::abs(d) : inf);
      }
    }
  }
  if (!finite) {
    rep.max_abs_tilt = inf;
    rep.max_tilt_slope = inf;
  }
  rep.tilt_bounded = finite;
  if (!finite) {
    rep.tilt_compact_support = false;
  } else if (tilt) {
    rep.tilt_compact_support = margin > 0.0 && tilt->vanishes_near_ends(margin);
  } else {
    bool vanishes = margin > 0.0;
    for (std::size_t k = 0; k <= K && vanishes; ++k) {
      const double t = path.time(k);
      if (t > margin && t < path.horizon - margin) continue;
      for (std::size_t r = 0; r < nr; ++r) vanishes = vanishes && std::abs(zeta[k][r]) <= support_tol;
    }
    rep.tilt_compact_support = vanishes;
  }
  if (!rep.path_valid) rep.notes.push_back("path violates w(0)=0, monotone w, c>=0 or the continuity equation");
  return rep;
}

RegularizeResult regularize_to_admissible(const ReactionNetwork& net, const GridPath& path, double delta,
                                          const RegularizeOptions& options) {
  check_delta_open_unit(delta, "regularize_to_admissible");
  const RateReport j = evaluate_J(net, path);
  if (!j.finite()) {
    throw ValidationError("regularize_to_admissible: input has infinite rate (" + *j.infinity_reason + ")");
  }
  RegularizeResult res;
  GridPath current = path;
  std::vector<std::string> notes;
  bool skipped_before = false;
  auto stage = [&](bool enabled, const char* name, auto&& fn) {
    if (!enabled) {
      notes.push_back(std::string(name) + " skipped");
      skipped_before = true;
      return;
    }
    try {
      fn();
    } catch (const ValidationError& e) {
      if (!skipped_before) throw;
      notes.push_back(std::string(name) + " not applicable: " + e.what());
    }
  };
  stage(options.lift, "lift", [&] { current = approx_lift(net, current, delta, options.chat); });
  stage(options.mollify, "mollify", [&] { current = approx_mollify(current, delta); });
  stage(options.floor, "floor", [&] { current = approx_floor(net, current, delta); });
  stage(options.cutoff, "cutoff", [&] {
    CutoffResult cut = approx_cutoff_with_tilt(net, current, delta);
    current = std::move(cut.path);
    res.tilt = std::move(cut.tilt);
  });
  res.report = assess_admissibility(net, current, delta, res.tilt ? &*res.tilt : nullptr);
  res.report.notes.insert(res.report.notes.begin(), notes.begin(), notes.end());
  res.path = std::move(current);
  return res;
}

}  // namespace fluxldp
