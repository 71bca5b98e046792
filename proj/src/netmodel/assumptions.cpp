#include "fluxldp/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fluxldp/errors.hpp"
#include "fluxldp/nnls.hpp"
#include "fluxldp/rng.hpp"

namespace fluxldp {

bool AssumptionReport::all_passed() const {
  return cutoff_below.passed && convergence.passed && regularity.passed && monotonicity.passed &&
         superhomogeneity.passed;
}

namespace {

nlohmann::json check_json(const AssumptionCheck& c) {
  nlohmann::json j{{"item", c.item}, {"passed", c.passed}, {"detail", c.detail}};
  j["witnesses"] = nlohmann::json::array();
  for (const auto& w : c.witnesses) {
    j["witnesses"].push_back(
        {{"c", w.c}, {"reaction", w.reaction}, {"parameter", w.parameter}, {"observed", w.observed}, {"bound", w.bound}});
  }
  return j;
}

void add_witness(AssumptionCheck& check, const AssumptionOptions& opt, AssumptionWitness w) {
  check.passed = false;
  if (check.witnesses.size() < opt.max_witnesses) check.witnesses.push_back(std::move(w));
}

std::vector<RealVec> sample_window(const ReactionNetwork& net, std::span<const double> c0, double eps, int grid,
                                   double flux_window, std::size_t max_points) {
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  const std::size_t dims = ny + nr;
  const std::size_t g = static_cast<std::size_t>(std::max(grid, 2));
  std::vector<std::vector<double>> axes(dims);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t i = 0; i < g; ++i) {
      const double u = 2.0 * static_cast<double>(i) / static_cast<double>(g - 1) - 1.0;
      axes[y].push_back(std::max(0.0, c0[y] + eps * u));
    }
  }
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t i = 0; i < g; ++i) {
      axes[ny + r].push_back(flux_window * static_cast<double>(i) / static_cast<double>(g - 1));
    }
  }
  double total = 1.0;
  for (std::size_t d = 0; d < dims; ++d) total *= static_cast<double>(g);

  std::vector<RealVec> points;
  auto emit = [&](const std::vector<std::size_t>& idx) {
    RealVec ct(ny), w(nr);
    for (std::size_t y = 0; y < ny; ++y) ct[y] = axes[y][idx[y]];
    for (std::size_t r = 0; r < nr; ++r) w[r] = axes[ny + r][idx[ny + r]];
    RealVec c = net.apply_stoichiometry(ct, w);
    for (double& x : c) {
      if (x < 0.0 && x > -1e-12) x = 0.0;
    }
    if (std::all_of(c.begin(), c.end(), [](double x) { return x >= 0.0; })) points.push_back(std::move(c));
  };
  std::vector<std::size_t> idx(dims, 0);
  if (total <= static_cast<double>(max_points)) {
    for (;;) {
      emit(idx);
      std::size_t d = 0;
      while (d < dims && ++idx[d] == g) idx[d++] = 0;
      if (d == dims) break;
    }
  } else {
    StreamRng rng(0x5eed, 0);
    for (std::size_t k = 0; k < max_points; ++k) {
      for (auto& i : idx) i = static_cast<std::size_t>(rng() % g);
      emit(idx);
    }
  }
  return points;
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

nlohmann::json AssumptionReport::to_json() const {
  return {{"cutoff_below", check_json(cutoff_below)},
          {"convergence", check_json(convergence)},
          {"regularity", check_json(regularity)},
          {"monotonicity", check_json(monotonicity)},
          {"superhomogeneity", check_json(superhomogeneity)},
          {"psi_exponent", psi_exponent},
          {"convergence_gaps", convergence_gaps},
          {"window", {{"eps", window_eps}, {"flux", window_flux}, {"points", sample_points}}},
          {"all_passed", all_passed()}};
}

AssumptionReport validate_assumptions(const ReactionNetwork& net, std::span<const double> c0, double eps, int grid,
                                      const AssumptionOptions& opt) {
  if (!(eps > 0.0)) throw ValidationError("validate_assumptions: eps must be positive");
  if (c0.size() != net.num_species()) throw ValidationError("validate_assumptions: c0 has wrong length");
  if (opt.volumes.empty()) throw ValidationError("validate_assumptions: need at least one volume");
  const std::size_t ny = net.num_species(), nr = net.num_reactions();

  AssumptionReport rep;
  rep.cutoff_below.item = "(i) propensity cutoff below";
  rep.convergence.item = "(ii) uniform convergence of V^-1 k^V";
  rep.regularity.item = "(iii)-(iv) C1 and bounded on window";
  rep.monotonicity.item = "(v) monotonicity";
  rep.superhomogeneity.item = "(vi) superhomogeneity";
  rep.psi_exponent = std::max(1, net.max_total_order());
  rep.window_eps = eps;
  double cmax = 0.0;
  for (double x : c0) cmax = std::max(cmax, x);
  rep.window_flux = opt.flux_window > 0.0 ? opt.flux_window : 2.0 * (1.0 + cmax);

  const auto points = sample_window(net, c0, eps, grid, rep.window_flux, opt.max_points);
  rep.sample_points = points.size();

  // (i): counts strictly below the consumption of a reaction must give zero propensity.
  {
    const std::int64_t v = opt.volumes.front();
    std::size_t tested = 0;
    for (const auto& c : points) {
      CountVec n(ny);
      for (std::size_t y = 0; y < ny; ++y) n[y] = std::llround(static_cast<double>(v) * c[y]);
      for (std::size_t r = 0; r < nr; ++r) {
        const auto& g = net.reaction(r).gamma;
        for (std::size_t y = 0; y < ny; ++y) {
          if (g[y] >= 0) continue;
          CountVec m = n;
          for (std::int64_t below = 0; below < -g[y]; ++below) {
            m[y] = below;
            const double k = micro_propensity(net.reaction(r), v, m);
            ++tested;
            if (k != 0.0) {
              RealVec cw(ny);
              for (std::size_t z = 0; z < ny; ++z) cw[z] = static_cast<double>(m[z]) / static_cast<double>(v);
              add_witness(rep.cutoff_below, opt, {cw, r, static_cast<double>(v), k, 0.0});
            }
          }
        }
      }
    }
    rep.cutoff_below.detail = std::to_string(tested) + " boundary configurations at V=" + std::to_string(v);
  }

  // (ii): sup over lattice points of the window of Σ_r |V⁻¹k^{V,r} − k̄^{(r)}|.
  {
    std::size_t arg_point = 0;
    std::size_t arg_reaction = 0;
    double arg_observed = 0.0, arg_bound = 0.0;
    for (std::int64_t v : opt.volumes) {
      double sup = 0.0;
      for (std::size_t p = 0; p < points.size(); ++p) {
        CountVec n(ny);
        RealVec cl(ny);
        for (std::size_t y = 0; y < ny; ++y) {
          n[y] = std::llround(static_cast<double>(v) * points[p][y]);
          cl[y] = static_cast<double>(n[y]) / static_cast<double>(v);
        }
        double gap = 0.0, worst = -1.0;
        std::size_t worst_r = 0;
        for (std::size_t r = 0; r < nr; ++r) {
          const double micro = micro_propensity(net.reaction(r), v, n) / static_cast<double>(v);
          const double macro = macro_rate(net.reaction(r), cl);
          const double d = std::abs(micro - macro);
          gap += d;
          if (d > worst) {
            worst = d;
            worst_r = r;
            if (v == opt.volumes.back()) {
              arg_observed = micro;
              arg_bound = macro;
            }
          }
        }
        if (!std::isfinite(gap)) gap = std::numeric_limits<double>::infinity();
        if (gap > sup) {
          sup = gap;
          if (v == opt.volumes.back()) {
            arg_point = p;
            arg_reaction = worst_r;
          }
        }
      }
      rep.convergence_gaps.push_back(sup);
    }
    const double first = rep.convergence_gaps.front(), last = rep.convergence_gaps.back();
    const double vfirst = static_cast<double>(opt.volumes.front()), vlast = static_cast<double>(opt.volumes.back());
    const double required = std::max(1e-12, first * std::sqrt(vfirst / vlast));
    const bool ok = std::isfinite(last) && last <= required;
    std::ostringstream os;
    os << "sup gaps";
    for (std::size_t i = 0; i < opt.volumes.size(); ++i) os << " V=" << opt.volumes[i] << ":" << fmt_double(rep.convergence_gaps[i]);
    if (first > 0.0 && last > 0.0 && vlast > vfirst) {
      os << "; log-log slope " << fmt_double(std::log(last / first) / std::log(vlast / vfirst));
    }
    rep.convergence.detail = os.str();
    if (!ok && !points.empty()) {
      add_witness(rep.convergence, opt, {points[arg_point], arg_reaction, vlast, arg_observed, arg_bound});
    }
  }

  // (iii)-(iv): finite rates and finite-difference gradients on the window.
  {
    double kmax = 0.0, gmax = 0.0;
    for (const auto& c : points) {
      for (std::size_t r = 0; r < nr; ++r) {
        const double k = macro_rate(net.reaction(r), c);
        if (!std::isfinite(k) || k < 0.0) {
          add_witness(rep.regularity, opt, {c, r, 0.0, k, 0.0});
          continue;
        }
        kmax = std::max(kmax, k);
        for (std::size_t y = 0; y < ny; ++y) {
          const double h = 1e-6 * (1.0 + std::abs(c[y]));
          RealVec up = c, dn = c;
          up[y] += h;
          double deriv;
          if (c[y] >= h) {
            dn[y] -= h;
            deriv = (macro_rate(net.reaction(r), up) - macro_rate(net.reaction(r), dn)) / (2.0 * h);
          } else {
            deriv = (macro_rate(net.reaction(r), up) - k) / h;
          }
          if (!std::isfinite(deriv)) {
            add_witness(rep.regularity, opt, {c, r, h, deriv, 0.0});
          } else {
            gmax = std::max(gmax, std::abs(deriv));
          }
        }
      }
    }
    rep.regularity.detail = "max k = " + fmt_double(kmax) + ", max |grad k| = " + fmt_double(gmax);
  }

  // (v): k̄(c + h e_y) ≥ k̄(c).
  {
    const double shifts[] = {0.01, 0.1, 1.0};
    std::size_t pairs = 0;
    for (const auto& c : points) {
      for (std::size_t y = 0; y < ny; ++y) {
        for (double h : shifts) {
          RealVec hi = c;
          hi[y] += h;
          for (std::size_t r = 0; r < nr; ++r) {
            const double lo_k = macro_rate(net.reaction(r), c);
            const double hi_k = macro_rate(net.reaction(r), hi);
            ++pairs;
            if (hi_k < lo_k - 1e-12 * (1.0 + std::abs(lo_k))) {
              add_witness(rep.monotonicity, opt, {c, r, h, hi_k, lo_k});
            }
          }
        }
      }
    }
    rep.monotonicity.detail = std::to_string(pairs) + " ordered pairs";
  }

  // (vi): k̄(δc) ≥ δ^p k̄(c) with p the maximal total order.
  {
    const double deltas[] = {0.9, 0.5, 0.25, 0.1, 0.01};
    const double p = rep.psi_exponent;
    for (const auto& c : points) {
      for (double d : deltas) {
        RealVec dc = c;
        for (double& x : dc) x *= d;
        for (std::size_t r = 0; r < nr; ++r) {
          const double lhs = macro_rate(net.reaction(r), dc);
          const double rhs = std::pow(d, p) * macro_rate(net.reaction(r), c);
          if (lhs < rhs * (1.0 - 1e-12) - 1e-300) add_witness(rep.superhomogeneity, opt, {c, r, d, lhs, rhs});
        }
      }
    }
    rep.superhomogeneity.detail = "psi(delta) = delta^" + std::to_string(rep.psi_exponent);
  }
  return rep;
}

std::optional<RealVec> simplex_witness(const ReactionNetwork& net, std::span<const double> c0,
                                       std::span<const double> c, double tol) {
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  if (c0.size() != ny || c.size() != ny) throw ValidationError("simplex_contains: vectors have wrong length");
  for (double x : c0) {
    if (x < 0.0) throw ValidationError("simplex_contains: c0 must be non-negative");
  }
  for (double x : c) {
    if (x < -tol) return std::nullopt;
  }
  Eigen::MatrixXd gamma(static_cast<Eigen::Index>(ny), static_cast<Eigen::Index>(nr));
  Eigen::VectorXd d(static_cast<Eigen::Index>(ny));
  for (std::size_t y = 0; y < ny; ++y) {
    d(static_cast<Eigen::Index>(y)) = c[y] - c0[y];
    for (std::size_t r = 0; r < nr; ++r) {
      gamma(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(r)) = net.gamma(y, r);
    }
  }
  const Eigen::VectorXd w = nonnegative_least_squares(gamma, d);
  const double resid = (gamma * w - d).cwiseAbs().maxCoeff();
  if (resid > tol) return std::nullopt;
  return RealVec(w.data(), w.data() + w.size());
}

bool simplex_contains(const ReactionNetwork& net, std::span<const double> c0, std::span<const double> c, double tol) {
  return simplex_witness(net, c0, c, tol).has_value();
}

}  // namespace fluxldp
