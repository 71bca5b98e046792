#include "fluxldp/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "fluxldp/errors.hpp"
#include "fluxldp/nnls.hpp"

namespace fluxldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTinyFlux = 1e-30;

nlohmann::json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return nullptr;
  return x > 0 ? "inf" : "-inf";
}

// Concentration at a node, with values in [-tol, 0) treated as 0.
bool clean_concentration(const RealVec& c, double tol, RealVec& out) {
  out = c;
  for (double& x : out) {
    if (x < -tol || !std::isfinite(x)) return false;
    if (x < 0.0) x = 0.0;
  }
  return true;
}

std::string at_node(std::size_t k, double t) {
  std::ostringstream os;
  os << "node " << k << " (t=" << t << ")";
  return os.str();
}

}  // namespace

double rel_entropy(double j, double jhat) {
  if (!(j >= 0.0) || !(jhat >= 0.0)) throw ValidationError("rel_entropy: arguments must be non-negative");
  if (j < kTinyFlux) return jhat;
  if (jhat == 0.0) return kInf;
  return j * std::log(j / jhat) - j + jhat;
}

double hamiltonian(const ReactionNetwork& net, std::span<const double> c, std::span<const double> zeta) {
  if (zeta.size() != net.num_reactions()) throw ValidationError("hamiltonian: zeta has wrong length");
  double h = 0.0;
  for (std::size_t r = 0; r < zeta.size(); ++r) {
    const double k = macro_rate(net.reaction(r), c);
    if (k != 0.0) h += k * std::expm1(zeta[r]);
  }
  return h;
}

nlohmann::json RateReport::to_json() const {
  nlohmann::json b = nlohmann::json::array();
  for (double x : breakdown) b.push_back(json_number(x));
  nlohmann::json j{{"value", json_number(value)}, {"breakdown", b}};
  j["infinity_reason"] = infinity_reason ? nlohmann::json(*infinity_reason) : nlohmann::json(nullptr);
  if (!detail.empty()) j["detail"] = detail;
  return j;
}

RateReport evaluate_J(const ReactionNetwork& net, const GridPath& path, double tol) {
  path.validate_shape();
  const std::size_t nr = net.num_reactions();
  if (path.num_species() != net.num_species() || path.num_reactions() != nr) {
    throw ValidationError("evaluate_J: path dimensions do not match the network");
  }
  RateReport rep;
  rep.breakdown.assign(nr, 0.0);
  auto infinite = [&](const char* reason, std::string detail) {
    rep.value = kInf;
    rep.infinity_reason = reason;
    rep.detail = std::move(detail);
    std::fill(rep.breakdown.begin(), rep.breakdown.end(), kInf);
    return rep;
  };

  const double residual = path.continuity_residual(net);
  if (!(residual <= tol)) {
    std::ostringstream os;
    os << "max |c - c(0) - Gamma w| = " << residual;
    return infinite(kContinuityViolation, os.str());
  }
  const double h = path.dt();
  for (std::size_t k = 0; k + 1 < path.num_nodes(); ++k) {
    for (std::size_t r = 0; r < nr; ++r) {
      if (path.w[k + 1][r] - path.w[k][r] < -tol * h) {
        return infinite(kNegativeFlux, "w decreases on cell " + std::to_string(k) + ", reaction " + std::to_string(r));
      }
    }
  }
  RealVec c;
  for (std::size_t k = 0; k < path.num_nodes(); ++k) {
    if (!clean_concentration(path.c[k], tol, c)) {
      return infinite(kAbsoluteContinuity, "negative concentration at " + at_node(k, path.time(k)));
    }
    const RealVec wdot = path.centered_rate(k);
    const double weight = (k == 0 || k == path.steps()) ? 0.5 * h : h;
    for (std::size_t r = 0; r < nr; ++r) {
      double j = wdot[r];
      if (j < -tol) {
        return infinite(kNegativeFlux, "dw/dt < 0 at " + at_node(k, path.time(k)) + ", reaction " + std::to_string(r));
      }
      j = std::max(j, 0.0);
      const double k_bar = macro_rate(net.reaction(r), c);
      if (k_bar == 0.0) {
        if (j > tol) {
          return infinite(kAbsoluteContinuity,
                          "positive flux with zero rate at " + at_node(k, path.time(k)) + ", reaction " + std::to_string(r));
        }
        continue;
      }
      rep.breakdown[r] += weight * rel_entropy(j, k_bar);
    }
  }
  rep.value = 0.0;
  for (double x : rep.breakdown) rep.value += x;
  return rep;
}

double evaluate_G(const ReactionNetwork& net, const GridPath& path, const TiltProtocol& tilt) {
  path.validate_shape();
  if (tilt.num_reactions() != net.num_reactions() || path.num_reactions() != net.num_reactions()) {
    throw ValidationError("evaluate_G: dimensions do not match the network");
  }
  if (std::abs(tilt.horizon() - path.horizon) > 1e-12 * path.horizon) {
    throw ValidationError("evaluate_G: tilt and path horizons differ");
  }
  const bool same_grid = tilt.steps() == path.steps();
  const double h = path.dt();
  RealVec c, zeta(net.num_reactions());
  double total = 0.0;
  for (std::size_t k = 0; k < path.num_nodes(); ++k) {
    c = path.c[k];
    for (double& x : c) x = std::max(x, 0.0);
    for (std::size_t r = 0; r < zeta.size(); ++r) {
      zeta[r] = same_grid ? tilt.nodes()[k][r] : tilt.value(path.time(k), r);
    }
    const RealVec wdot = path.centered_rate(k);
    double integrand = -hamiltonian(net, c, zeta);
    for (std::size_t r = 0; r < zeta.size(); ++r) integrand += zeta[r] * wdot[r];
    total += ((k == 0 || k == path.steps()) ? 0.5 * h : h) * integrand;
  }
  return total;
}

TiltProtocol optimal_tilt(const ReactionNetwork& net, const GridPath& path, double cap) {
  if (!(cap > 0.0)) throw ValidationError("optimal_tilt: cap must be positive");
  path.validate_shape();
  std::vector<RealVec> nodes(path.num_nodes(), RealVec(net.num_reactions()));
  RealVec c;
  for (std::size_t k = 0; k < path.num_nodes(); ++k) {
    c = path.c[k];
    for (double& x : c) x = std::max(x, 0.0);
    const RealVec wdot = path.centered_rate(k);
    for (std::size_t r = 0; r < net.num_reactions(); ++r) {
      const double j = wdot[r] < kTinyFlux ? 0.0 : wdot[r];
      const double k_bar = macro_rate(net.reaction(r), c);
      double z;
      if (j > 0.0 && k_bar > 0.0) {
        z = std::min(std::log(j / k_bar), cap);
      } else if (k_bar > 0.0) {
        z = -cap;
      } else if (j > 0.0) {
        z = cap;
      } else {
        z = 0.0;
      }
      nodes[k][r] = z;
    }
  }
  return TiltProtocol(path.horizon, std::move(nodes));
}

// ---------------------------------------------------------------------------

CellSolution contraction_cell(const ReactionNetwork& net, std::span<const double> c, std::span<const double> cdot,
                              const ContractionParams& params) {
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  if (c.size() != ny || cdot.size() != ny) throw ValidationError("contraction: vectors have wrong length");
  CellSolution sol;
  sol.xi.assign(ny, 0.0);
  sol.j.assign(nr, 0.0);

  std::vector<std::size_t> active;
  RealVec kbar(nr);
  for (std::size_t r = 0; r < nr; ++r) {
    kbar[r] = macro_rate(net.reaction(r), c);
    if (kbar[r] > 0.0) active.push_back(r);
  }
  const auto Y = static_cast<Eigen::Index>(ny);
  const auto A = static_cast<Eigen::Index>(active.size());
  Eigen::VectorXd d(Y);
  for (Eigen::Index y = 0; y < Y; ++y) d(y) = cdot[static_cast<std::size_t>(y)];
  double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  if (!active.empty()) {
    for (auto r : active) scale = std::max(scale, kbar[r]);
  }
  const double feas_tol = params.feasibility_tol * scale;

  auto infeasible = [&](const char* reason) {
    sol.value = kInf;
    sol.dual_value = kInf;
    sol.infinity_reason = reason;
    sol.residual = kInf;
    return sol;
  };
  auto in_cone = [&](const Eigen::MatrixXd& G) {
    if (G.cols() == 0) return d.cwiseAbs().maxCoeff() <= feas_tol;
    const Eigen::VectorXd x = nonnegative_least_squares(G, d);
    return (G * x - d).cwiseAbs().maxCoeff() <= feas_tol;
  };

  Eigen::MatrixXd G(Y, A);
  for (Eigen::Index a = 0; a < A; ++a) {
    for (Eigen::Index y = 0; y < Y; ++y) G(y, a) = net.gamma(static_cast<std::size_t>(y), active[static_cast<std::size_t>(a)]);
  }
  if (!in_cone(G)) {
    Eigen::MatrixXd full(Y, static_cast<Eigen::Index>(nr));
    for (std::size_t r = 0; r < nr; ++r) {
      for (Eigen::Index y = 0; y < Y; ++y) full(y, static_cast<Eigen::Index>(r)) = net.gamma(static_cast<std::size_t>(y), r);
    }
    return infeasible(in_cone(full) ? kAbsoluteContinuity : kNegativeFlux);
  }
  if (A == 0) {
    sol.value = 0.0;
    sol.dual_value = 0.0;
    return sol;
  }

  // Orthonormal basis B of range(G); the dual is strictly concave in η with ξ = Bη.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-10 * std::max(1.0, sv(0))) ++rank;
  }
  Eigen::VectorXd kb(A);
  for (Eigen::Index a = 0; a < A; ++a) kb(a) = kbar[active[static_cast<std::size_t>(a)]];
  if (rank == 0) {
    for (Eigen::Index a = 0; a < A; ++a) sol.j[active[static_cast<std::size_t>(a)]] = kb(a);
    sol.value = 0.0;
    sol.dual_value = 0.0;
    sol.residual = d.cwiseAbs().maxCoeff();
    return sol;
  }
  const Eigen::MatrixXd B = svd.matrixU().leftCols(rank);
  const Eigen::MatrixXd M = B.transpose() * G;  // rank × A, full row rank
  const Eigen::VectorXd e = B.transpose() * d;

  auto fluxes = [&](const Eigen::VectorXd& eta) -> Eigen::VectorXd {
    return (kb.array() * (M.transpose() * eta).array().exp()).matrix();
  };
  auto dual = [&](const Eigen::VectorXd& eta) {
    const Eigen::VectorXd z = M.transpose() * eta;
    double phi = eta.dot(e);
    for (Eigen::Index a = 0; a < A; ++a) phi -= kb(a) * std::expm1(z(a));
    return phi;
  };

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(rank);
  Eigen::VectorXd j = fluxes(eta);
  double phi = dual(eta);
  const double grad_tol = params.gradient_tol * scale;
  bool converged = false;
  int it = 0;
  for (; it < params.max_iterations; ++it) {
    const Eigen::VectorXd grad = e - M * j;
    if ((d - G * j).cwiseAbs().maxCoeff() < grad_tol) {
      converged = true;
      break;
    }
    Eigen::MatrixXd H = M * j.asDiagonal() * M.transpose();
    const double ridge = 1e-14 * std::max(1.0, H.diagonal().maxCoeff());
    H.diagonal().array() += ridge;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    const double slope = grad.dot(step);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd trial = eta + t * step;
      const double phi_trial = dual(trial);
      if (std::isfinite(phi_trial) && phi_trial >= phi + params.armijo * t * slope) {
        eta = trial;
        phi = phi_trial;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    j = fluxes(eta);
    if (!moved) break;
  }
  if (!converged && (d - G * j).cwiseAbs().maxCoeff() < grad_tol) converged = true;
  sol.iterations = it;
  if (!converged) {
    std::ostringstream os;
    os << "contraction: Newton did not converge after " << it << " iterations (residual "
       << (d - G * j).cwiseAbs().maxCoeff() << ")";
    throw NumericalError(os.str());
  }
  const Eigen::VectorXd xi = B * eta;
  for (Eigen::Index y = 0; y < Y; ++y) sol.xi[static_cast<std::size_t>(y)] = xi(y);
  sol.value = 0.0;
  for (Eigen::Index a = 0; a < A; ++a) {
    const std::size_t r = active[static_cast<std::size_t>(a)];
    sol.j[r] = j(a);
    sol.value += rel_entropy(j(a), kb(a));
  }
  sol.dual_value = phi;
  sol.residual = (d - G * j).cwiseAbs().maxCoeff();
  return sol;
}

nlohmann::json ContractionResult::to_json() const {
  nlohmann::json j{{"value", json_number(value)},
                   {"max_residual", json_number(max_residual)},
                   {"max_duality_gap", json_number(max_duality_gap)},
                   {"max_newton_iterations", max_iterations_used}};
  j["infinity_reason"] = infinity_reason ? nlohmann::json(*infinity_reason) : nlohmann::json(nullptr);
  return j;
}

ContractionResult contraction_I(const ReactionNetwork& net, const GridPath& cpath, const ContractionParams& params) {
  if (cpath.c.size() < 2) throw ValidationError("contraction: need at least two nodes");
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  for (const auto& row : cpath.c) {
    if (row.size() != ny) throw ValidationError("contraction: concentration rows have wrong length");
  }
  const std::size_t K = cpath.c.size() - 1;
  const double h = cpath.horizon / static_cast<double>(K);
  GridPath probe;
  probe.horizon = cpath.horizon;
  probe.c = cpath.c;
  probe.w.assign(K + 1, RealVec(nr, 0.0));

  ContractionResult res;
  res.node_cost.assign(K + 1, 0.0);
  std::vector<RealVec> fluxes(K + 1, RealVec(nr, 0.0));
  RealVec c;
  for (std::size_t k = 0; k <= K; ++k) {
    if (!clean_concentration(cpath.c[k], params.feasibility_tol, c)) {
      res.value = kInf;
      res.infinity_reason = kAbsoluteContinuity;
      return res;
    }
    const RealVec cdot = probe.centered_concentration_rate(k);
    const CellSolution cell = contraction_cell(net, c, cdot, params);
    if (cell.infinity_reason) {
      res.value = kInf;
      res.infinity_reason = cell.infinity_reason;
      return res;
    }
    res.node_cost[k] = cell.value;
    fluxes[k] = cell.j;
    res.max_residual = std::max(res.max_residual, cell.residual);
    res.max_duality_gap = std::max(res.max_duality_gap, std::abs(cell.value - cell.dual_value));
    res.max_iterations_used = std::max(res.max_iterations_used, cell.iterations);
    res.value += ((k == 0 || k == K) ? 0.5 * h : h) * cell.value;
  }
  std::vector<RealVec> w(K + 1, RealVec(nr, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t r = 0; r < nr; ++r) w[k + 1][r] = w[k][r] + 0.5 * h * (fluxes[k][r] + fluxes[k + 1][r]);
  }
  res.minimizer = GridPath(cpath.horizon, cpath.c, std::move(w));
  return res;
}

}  // namespace fluxldp
