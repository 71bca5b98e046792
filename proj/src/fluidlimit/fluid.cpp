#include "fluxldp/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluxldp/errors.hpp"
#include "fluxldp/jump_path.hpp"
#include "fluxldp/parallel.hpp"

namespace fluxldp {

namespace {

class FluxField {
 public:
  FluxField(const ReactionNetwork& net, std::span<const double> c0, const TiltProtocol* tilt, double h)
      : net_(net), c0_(c0.begin(), c0.end()), tilt_(tilt), c_(c0.size()) {
    double scale = 1.0;
    for (double x : c0) scale = std::max(scale, std::abs(x));
    clamp_limit_ = h * h * scale;
  }

  void operator()(double t, const RealVec& w, RealVec& out) {
    for (std::size_t y = 0; y < c_.size(); ++y) {
      double x = c0_[y];
      for (std::size_t r = 0; r < w.size(); ++r) x += net_.gamma(y, r) * w[r];
      if (x < 0.0) {
        if (x < -clamp_limit_) {
          std::ostringstream os;
          os << "fluid: concentration of " << net_.species()[y] << " reached " << x << " at t=" << t
             << ", beyond the step-size clamp";
          throw NumericalError(os.str());
        }
        min_clamped_ = std::min(min_clamped_, x);
        x = 0.0;
      }
      c_[y] = x;
    }
    for (std::size_t r = 0; r < out.size(); ++r) {
      double k = macro_rate(net_.reaction(r), c_);
      if (tilt_) k *= std::exp(tilt_->value(t, r));
      out[r] = k;
    }
  }

  double min_clamped() const { return min_clamped_; }

 private:
  const ReactionNetwork& net_;
  RealVec c0_;
  const TiltProtocol* tilt_;
  RealVec c_;
  double clamp_limit_ = 0.0;
  double min_clamped_ = 0.0;
};

GridPath integrate(const ReactionNetwork& net, std::span<const double> c0, const TiltProtocol* tilt, double horizon,
                   std::size_t steps) {
  if (c0.size() != net.num_species()) throw ValidationError("fluid: c0 has wrong length");
  for (double x : c0) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("fluid: c0 must be finite and non-negative");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("fluid: horizon must be positive");
  if (steps < 1) throw ValidationError("fluid: need at least one step");
  if (tilt && tilt->num_reactions() != net.num_reactions()) {
    throw ValidationError("fluid: tilt has wrong number of reactions");
  }
  const std::size_t nr = net.num_reactions();
  const double h = horizon / static_cast<double>(steps);
  FluxField field(net, c0, tilt, h);
  std::vector<RealVec> w(steps + 1, RealVec(nr, 0.0)), c(steps + 1);
  c[0] = RealVec(c0.begin(), c0.end());
  RealVec k1(nr), k2(nr), k3(nr), k4(nr), tmp(nr);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = horizon * static_cast<double>(k) / static_cast<double>(steps);
    const RealVec& wk = w[k];
    field(t, wk, k1);
    for (std::size_t r = 0; r < nr; ++r) tmp[r] = wk[r] + 0.5 * h * k1[r];
    field(t + 0.5 * h, tmp, k2);
    for (std::size_t r = 0; r < nr; ++r) tmp[r] = wk[r] + 0.5 * h * k2[r];
    field(t + 0.5 * h, tmp, k3);
    for (std::size_t r = 0; r < nr; ++r) tmp[r] = wk[r] + h * k3[r];
    field(t + h, tmp, k4);
    for (std::size_t r = 0; r < nr; ++r) {
      w[k + 1][r] = wk[r] + h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
      if (!std::isfinite(w[k + 1][r])) {
        std::ostringstream os;
        os << "fluid: non-finite flux, blow-up near t=" << t + h;
        throw NumericalError(os.str());
      }
    }
    c[k + 1] = net.apply_stoichiometry(c0, w[k + 1]);
  }
  GridPath out(horizon, std::move(c), std::move(w));
  if (field.min_clamped() < 0.0) {
    std::ostringstream os;
    os << "negative concentration down to " << field.min_clamped() << " clamped to 0 in rate evaluation";
    out.warnings.push_back(os.str());
  }
  return out;
}

}  // namespace

GridPath solve_rre(const ReactionNetwork& net, std::span<const double> c0, double horizon, std::size_t steps) {
  return integrate(net, c0, nullptr, horizon, steps);
}

GridPath solve_perturbed(const ReactionNetwork& net, std::span<const double> c0, const TiltProtocol& tilt,
                         double horizon, std::size_t steps) {
  if (std::abs(tilt.horizon() - horizon) > 1e-12 * horizon) {
    throw ValidationError("fluid: tilt horizon differs from the integration horizon");
  }
  if (tilt.is_zero()) return integrate(net, c0, nullptr, horizon, steps);
  return integrate(net, c0, &tilt, horizon, steps);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_slope: need matching samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

nlohmann::json LlnStats::to_json() const {
  return {{"V", volume}, {"replicas", gaps.size()}, {"mean", mean}, {"median", median},
          {"q90", q90},  {"q99", q99},               {"max", max}};
}

LlnStats lln_gap(const ReactionNetwork& net, std::int64_t volume, std::span<const double> c0, double horizon,
                 std::size_t replicas, std::uint64_t seed, const LlnOptions& options) {
  if (replicas < 1) throw ValidationError("lln_gap: need at least one replica");
  if (volume <= 0) throw ValidationError("lln_gap: volume must be positive");
  CountVec n0(c0.size());
  for (std::size_t y = 0; y < c0.size(); ++y) {
    const double scaled = static_cast<double>(volume) * c0[y];
    n0[y] = std::llround(scaled);
    if (std::abs(scaled - static_cast<double>(n0[y])) > 1e-9 * (1.0 + std::abs(scaled))) {
      throw ValidationError("lln_gap: V*c0 must be an integer vector");
    }
  }
  const GridPath fluid = options.tilt ? solve_perturbed(net, c0, *options.tilt, horizon, options.steps)
                                      : solve_rre(net, c0, horizon, options.steps);
  LlnStats stats;
  stats.volume = volume;
  stats.gaps.assign(replicas, 0.0);
  parallel_for(replicas, options.threads, [&](std::size_t i) {
    SimulateOptions sim;
    sim.stream = i;
    const JumpPath p = simulate(net, volume, n0, horizon, seed, options.tilt, sim);
    stats.gaps[i] = grid_sup_distance(to_grid(net, p, options.steps), fluid);
  });
  for (double g : stats.gaps) stats.mean += g;
  stats.mean /= static_cast<double>(replicas);
  stats.median = quantile(stats.gaps, 0.5);
  stats.q90 = quantile(stats.gaps, 0.9);
  stats.q99 = quantile(stats.gaps, 0.99);
  stats.max = *std::max_element(stats.gaps.begin(), stats.gaps.end());
  return stats;
}

}  // namespace fluxldp
