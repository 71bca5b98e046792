#include "fluxldp/tilt.hpp"

#include <algorithm>
#include <cmath>

#include "fluxldp/errors.hpp"

namespace fluxldp {

namespace {

// (expm1(d) − d) / d, i.e. φ(d) − 1 with φ(d) = (e^d − 1)/d.
double phi_minus_one(double d) {
  if (std::abs(d) < 1e-4) return d * (0.5 + d * (1.0 / 6.0 + d / 24.0));
  return (std::expm1(d) - d) / d;
}

// ∫ over an interval of length h of (e^{z(s)} − 1) where z is linear from z0 to z1.
double segment_expm1(double h, double z0, double z1) {
  const double d = z1 - z0;
  const double phi = 1.0 + phi_minus_one(d);
  return h * (std::expm1(z0) * phi + phi_minus_one(d));
}

}  // namespace

TiltProtocol::TiltProtocol(double horizon, std::vector<RealVec> nodes) : horizon_(horizon), nodes_(std::move(nodes)) {
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) throw ValidationError("tilt: horizon must be positive");
  if (nodes_.size() < 2) throw ValidationError("tilt: need at least two grid nodes");
  const std::size_t nr = nodes_.front().size();
  if (nr == 0) throw ValidationError("tilt: need at least one reaction");
  for (const auto& row : nodes_) {
    if (row.size() != nr) throw ValidationError("tilt: ragged node array");
    for (double z : row) {
      if (!std::isfinite(z)) throw ValidationError("tilt: values must be finite");
    }
  }
  suffix_max_.assign(nodes_.size(), RealVec(nr));
  suffix_max_.back() = nodes_.back();
  for (std::size_t k = nodes_.size() - 1; k-- > 0;) {
    for (std::size_t r = 0; r < nr; ++r) suffix_max_[k][r] = std::max(nodes_[k][r], suffix_max_[k + 1][r]);
  }
}

TiltProtocol TiltProtocol::zero(std::size_t num_reactions, double horizon) {
  return TiltProtocol(horizon, std::vector<RealVec>(2, RealVec(num_reactions, 0.0)));
}

TiltProtocol TiltProtocol::constant(RealVec values, double horizon) {
  return TiltProtocol(horizon, std::vector<RealVec>(2, std::move(values)));
}

TiltProtocol TiltProtocol::from_species_potential(const ReactionNetwork& net, double horizon,
                                                  const std::vector<RealVec>& xi) {
  std::vector<RealVec> nodes;
  nodes.reserve(xi.size());
  for (const auto& row : xi) {
    if (row.size() != net.num_species()) throw ValidationError("tilt: species potential has wrong length");
    RealVec z(net.num_reactions(), 0.0);
    for (std::size_t r = 0; r < net.num_reactions(); ++r) {
      for (std::size_t y = 0; y < net.num_species(); ++y) z[r] += row[y] * net.gamma(y, r);
    }
    nodes.push_back(std::move(z));
  }
  return TiltProtocol(horizon, std::move(nodes));
}

double TiltProtocol::node_time(std::size_t k) const {
  return horizon_ * static_cast<double>(k) / static_cast<double>(steps());
}

void TiltProtocol::locate(double t, std::size_t& k, double& frac) const {
  const std::size_t K = steps();
  if (t <= 0.0) {
    k = 0;
    frac = 0.0;
    return;
  }
  if (t >= horizon_) {
    k = K - 1;
    frac = 1.0;
    return;
  }
  const double pos = t / horizon_ * static_cast<double>(K);
  k = std::min(static_cast<std::size_t>(pos), K - 1);
  frac = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
}

double TiltProtocol::value(double t, std::size_t r) const {
  std::size_t k;
  double frac;
  locate(t, k, frac);
  const double a = nodes_[k][r], b = nodes_[k + 1][r];
  return frac == 0.0 ? a : (frac == 1.0 ? b : a + frac * (b - a));
}

RealVec TiltProtocol::values(double t) const {
  RealVec out(num_reactions());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = value(t, r);
  return out;
}

double TiltProtocol::max_after(double t, std::size_t r) const {
  std::size_t k;
  double frac;
  locate(t, k, frac);
  return std::max(value(t, r), suffix_max_[k + 1][r]);
}

double TiltProtocol::integral_expm1(std::size_t r, double a, double b) const {
  a = std::clamp(a, 0.0, horizon_);
  b = std::clamp(b, 0.0, horizon_);
  if (b <= a) return 0.0;
  std::size_t ka, kb;
  double fa, fb;
  locate(a, ka, fa);
  locate(b, kb, fb);
  if (ka == kb) return segment_expm1(b - a, value(a, r), value(b, r));
  double total = segment_expm1(node_time(ka + 1) - a, value(a, r), nodes_[ka + 1][r]);
  for (std::size_t k = ka + 1; k < kb; ++k) {
    total += segment_expm1(node_time(k + 1) - node_time(k), nodes_[k][r], nodes_[k + 1][r]);
  }
  total += segment_expm1(b - node_time(kb), nodes_[kb][r], value(b, r));
  return total;
}

double TiltProtocol::integral(std::size_t r, double a, double b) const {
  a = std::clamp(a, 0.0, horizon_);
  b = std::clamp(b, 0.0, horizon_);
  if (b <= a) return 0.0;
  std::size_t ka, kb;
  double fa, fb;
  locate(a, ka, fa);
  locate(b, kb, fb);
  if (ka == kb) return 0.5 * (b - a) * (value(a, r) + value(b, r));
  double total = 0.5 * (node_time(ka + 1) - a) * (value(a, r) + nodes_[ka + 1][r]);
  for (std::size_t k = ka + 1; k < kb; ++k) {
    total += 0.5 * (node_time(k + 1) - node_time(k)) * (nodes_[k][r] + nodes_[k + 1][r]);
  }
  total += 0.5 * (b - node_time(kb)) * (nodes_[kb][r] + value(b, r));
  return total;
}

bool TiltProtocol::is_zero() const {
  for (const auto& row : nodes_) {
    for (double z : row) {
      if (z != 0.0) return false;
    }
  }
  return true;
}

bool TiltProtocol::is_constant() const {
  for (const auto& row : nodes_) {
    if (row != nodes_.front()) return false;
  }
  return true;
}

bool TiltProtocol::vanishes_near_ends(double delta, double tol) const {
  if (delta <= 0.0) return true;
  if (2.0 * delta > horizon_) return is_zero();
  for (std::size_t r = 0; r < num_reactions(); ++r) {
    if (std::abs(value(delta, r)) > tol || std::abs(value(horizon_ - delta, r)) > tol) return false;
    for (std::size_t k = 0; k <= steps(); ++k) {
      const double t = node_time(k);
      if ((t <= delta || t >= horizon_ - delta) && std::abs(nodes_[k][r]) > tol) return false;
    }
  }
  return true;
}

void TiltProtocol::set_support_margin(double delta) {
  if (!(delta > 0.0)) throw ValidationError("tilt: support margin must be positive");
  if (!vanishes_near_ends(delta)) throw ValidationError("tilt: values do not vanish within the support margin");
  margin_ = delta;
}

TiltProtocol TiltProtocol::scaled(double factor) const {
  std::vector<RealVec> nodes = nodes_;
  for (auto& row : nodes) {
    for (double& z : row) z *= factor;
  }
  TiltProtocol out(horizon_, std::move(nodes));
  if (margin_ && std::isfinite(factor)) out.margin_ = margin_;
  return out;
}

nlohmann::json TiltProtocol::to_json() const {
  nlohmann::json j{{"T", horizon_}, {"zeta", nodes_}};
  j["support_margin"] = margin_ ? nlohmann::json(*margin_) : nlohmann::json(nullptr);
  return j;
}

TiltProtocol TiltProtocol::from_json(const nlohmann::json& j) {
  try {
    TiltProtocol tilt(j.at("T").get<double>(), j.at("zeta").get<std::vector<RealVec>>());
    if (j.contains("support_margin") && !j["support_margin"].is_null()) {
      tilt.set_support_margin(j["support_margin"].get<double>());
    }
    return tilt;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("tilt: ") + e.what());
  }
}

}  // namespace fluxldp
