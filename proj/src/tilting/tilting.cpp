#include "fluxldp/tilting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fluxldp/errors.hpp"
#include "fluxldp/parallel.hpp"
#include "fluxldp/rate.hpp"

namespace fluxldp {

double log_likelihood_ratio(const ReactionNetwork& net, const JumpPath& path, const TiltProtocol& tilt) {
  const std::size_t nr = net.num_reactions();
  if (tilt.num_reactions() != nr) throw ValidationError("log_likelihood_ratio: tilt has wrong number of reactions");
  if (std::abs(tilt.horizon() - path.horizon) > 1e-12 * path.horizon) {
    throw ValidationError("log_likelihood_ratio: tilt and path horizons differ");
  }
  if (tilt.is_zero()) return 0.0;
  CountVec n = path.n0;
  double jumps = 0.0, compensator = 0.0, t = 0.0;
  auto segment = [&](double until) {
    for (std::size_t r = 0; r < nr; ++r) {
      const double a = micro_propensity(net.reaction(r), path.volume, n);
      if (a > 0.0) compensator += a * tilt.integral_expm1(r, t, until);
    }
    t = until;
  };
  for (const auto& e : path.events) {
    segment(e.time);
    jumps += tilt.value(e.time, e.reaction);
    const auto& g = net.reaction(e.reaction).gamma;
    for (std::size_t y = 0; y < n.size(); ++y) n[y] += g[y];
  }
  segment(path.horizon);
  return jumps - compensator;
}

// ---------------------------------------------------------------------------

EventPredicate::EventPredicate(std::string description, Test test, nlohmann::json spec)
    : description_(std::move(description)), test_(std::move(test)), spec_(std::move(spec)) {}

EventPredicate EventPredicate::always() {
  return EventPredicate("always", [](const JumpPath&) { return true; }, {{"kind", "always"}});
}

EventPredicate EventPredicate::never() {
  return EventPredicate("never", [](const JumpPath&) { return false; }, {{"kind", "never"}});
}

EventPredicate EventPredicate::flux_count_between(std::size_t r, std::int64_t lo, std::int64_t hi) {
  std::ostringstream os;
  os << lo << " <= N_" << r << "(T) <= " << hi;
  return EventPredicate(
      os.str(),
      [r, lo, hi](const JumpPath& p) {
        std::int64_t count = 0;
        for (const auto& e : p.events) count += e.reaction == r;
        return lo <= count && count <= hi;
      },
      {{"kind", "flux_count"}, {"reaction", r}, {"lo", lo}, {"hi", hi}});
}

EventPredicate EventPredicate::flux_between(std::size_t r, double a, double b) {
  std::ostringstream os;
  os << a << " <= W_" << r << "(T) <= " << b;
  return EventPredicate(
      os.str(),
      [r, a, b](const JumpPath& p) {
        std::int64_t count = 0;
        for (const auto& e : p.events) count += e.reaction == r;
        const double v = static_cast<double>(p.volume);
        // Exact rational comparison up to a relative guard against representation error.
        const double x = static_cast<double>(count);
        const double guard = 1e-12 * (1.0 + std::abs(a * v) + std::abs(b * v));
        return a * v - guard <= x && x <= b * v + guard;
      },
      {{"kind", "flux"}, {"reaction", r}, {"a", a}, {"b", b}});
}

EventPredicate EventPredicate::species_count_between(const ReactionNetwork& net, std::size_t y, std::int64_t lo,
                                                     std::int64_t hi) {
  if (y >= net.num_species()) throw ValidationError("event: unknown species index");
  std::ostringstream os;
  os << lo << " <= n_" << net.species()[y] << "(T) <= " << hi;
  return EventPredicate(
      os.str(),
      [net, y, lo, hi](const JumpPath& p) {
        std::int64_t n = p.n0[y];
        for (const auto& e : p.events) n += net.gamma(y, e.reaction);
        return lo <= n && n <= hi;
      },
      {{"kind", "species_count"}, {"species", net.species()[y]}, {"lo", lo}, {"hi", hi}});
}

double tube_distance(const ReactionNetwork& net, const JumpPath& path, const GridPath& center) {
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  if (center.num_species() != ny || center.num_reactions() != nr) {
    throw ValidationError("tube: center dimensions do not match the network");
  }
  if (std::abs(center.horizon - path.horizon) > 1e-12 * path.horizon) {
    throw ValidationError("tube: center and path horizons differ");
  }
  const double v = static_cast<double>(path.volume);
  const double T = path.horizon;
  const std::size_t K = center.steps();
  RealVec c(ny), w(nr, 0.0);
  for (std::size_t y = 0; y < ny; ++y) c[y] = static_cast<double>(path.n0[y]) / v;
  std::vector<std::int64_t> n = path.n0, fired(nr, 0);

  double worst = 0.0;
  auto compare = [&](double t) {
    const RealVec cc = interpolate(center.c, T, t);
    const RealVec ww = interpolate(center.w, T, t);
    for (std::size_t y = 0; y < ny; ++y) worst = std::max(worst, std::abs(c[y] - cc[y]));
    for (std::size_t r = 0; r < nr; ++r) worst = std::max(worst, std::abs(w[r] - ww[r]));
  };
  auto cover = [&](double s, double e) {
    compare(s);
    // Grid nodes strictly inside (s, e) are the only interior kinks of the center.
    std::size_t k = static_cast<std::size_t>(std::floor(s / T * static_cast<double>(K))) + 1;
    for (; k < K; ++k) {
      const double tk = center.time(k);
      if (tk >= e) break;
      if (tk > s) compare(tk);
    }
    compare(e);
  };
  double s = 0.0;
  for (const auto& ev : path.events) {
    cover(s, ev.time);
    const auto& g = net.reaction(ev.reaction).gamma;
    for (std::size_t y = 0; y < ny; ++y) {
      n[y] += g[y];
      c[y] = static_cast<double>(n[y]) / v;
    }
    ++fired[ev.reaction];
    w[ev.reaction] = static_cast<double>(fired[ev.reaction]) / v;
    s = ev.time;
  }
  cover(s, T);
  return worst;
}

EventPredicate EventPredicate::tube(const ReactionNetwork& net, const GridPath& center, double radius) {
  if (!(radius > 0.0)) throw ValidationError("tube event: radius must be positive");
  std::ostringstream os;
  os << "sup-norm tube of radius " << radius;
  auto shared = std::make_shared<const GridPath>(center);
  return EventPredicate(
      os.str(), [net, shared, radius](const JumpPath& p) { return tube_distance(net, p, *shared) <= radius; },
      {{"kind", "tube"}, {"radius", radius}});
}

EventPredicate EventPredicate::g_ball(const ReactionNetwork& net, const GridPath& center, const TiltProtocol& tilt,
                                      double eps) {
  if (!(eps > 0.0)) throw ValidationError("g-ball event: eps must be positive");
  const double g_center = evaluate_G(net, center, tilt);
  std::ostringstream os;
  os << "|G - G(center)| < " << eps;
  auto shared_tilt = std::make_shared<const TiltProtocol>(tilt);
  const std::size_t steps = center.steps();
  return EventPredicate(
      os.str(),
      [net, shared_tilt, steps, g_center, eps](const JumpPath& p) {
        return std::abs(evaluate_G(net, to_grid(net, p, steps), *shared_tilt) - g_center) < eps;
      },
      {{"kind", "g_ball"}, {"eps", eps}});
}

EventPredicate EventPredicate::from_json(const nlohmann::json& spec, const ReactionNetwork& net,
                                         const GridPath* center, const TiltProtocol* tilt) {
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    auto reaction = [&]() {
      const auto r = spec.at("reaction").get<std::size_t>();
      if (r >= net.num_reactions()) throw ValidationError("event.reaction: index out of range");
      return r;
    };
    if (kind == "always") return always();
    if (kind == "never") return never();
    if (kind == "flux_count") {
      return flux_count_between(reaction(), spec.at("lo").get<std::int64_t>(), spec.at("hi").get<std::int64_t>());
    }
    if (kind == "flux") return flux_between(reaction(), spec.at("a").get<double>(), spec.at("b").get<double>());
    if (kind == "species_count") {
      const auto y = net.species_index(spec.at("species").get<std::string>());
      return species_count_between(net, y, spec.at("lo").get<std::int64_t>(), spec.at("hi").get<std::int64_t>());
    }
    if (kind == "tube") {
      if (!center) throw ValidationError("event: tube needs a center path");
      return tube(net, *center, spec.at("radius").get<double>());
    }
    if (kind == "g_ball") {
      if (!center || !tilt) throw ValidationError("event: g_ball needs a center path and tilt");
      return g_ball(net, *center, *tilt, spec.at("eps").get<double>());
    }
    throw ValidationError("event.kind: unknown kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("event: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

nlohmann::json EstimateReport::to_json() const {
  nlohmann::json j{{"p_hat", p_hat}, {"stderr", std_error}, {"ess", ess},
                   {"replicas", replicas}, {"hits", hits}, {"warnings", warnings}};
  j["log_p_hat"] = std::isfinite(log_p_hat) ? nlohmann::json(log_p_hat) : nlohmann::json(nullptr);
  return j;
}

EstimateReport importance_estimate(const ReactionNetwork& net, std::int64_t volume, std::span<const std::int64_t> n0,
                                   double horizon, const EventPredicate& event, const TiltProtocol& tilt,
                                   std::size_t replicas, std::uint64_t seed, const ImportanceOptions& options) {
  if (replicas < 2) throw ValidationError("importance_estimate: need at least two replicas");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> log_w(replicas, kNegInf);
  const bool untilted = tilt.is_zero();
  parallel_for(replicas, options.threads, [&](std::size_t i) {
    SimulateOptions sim;
    sim.stream = i;
    const JumpPath p = simulate(net, volume, n0, horizon, seed, untilted ? nullptr : &tilt, sim);
    if (!event(p)) return;
    const double lr = options.log_ratio ? options.log_ratio(p) : log_likelihood_ratio(net, p, tilt);
    log_w[i] = -lr;
  });

  EstimateReport rep;
  rep.replicas = replicas;
  double m = kNegInf;
  for (double x : log_w) {
    if (x > kNegInf) {
      ++rep.hits;
      m = std::max(m, x);
    }
  }
  if (rep.hits == 0) {
    rep.warnings.push_back("no replica hit the event; effective sample size is zero");
    return rep;
  }
  if (!std::isfinite(m)) throw NumericalError("importance_estimate: non-finite likelihood ratio");
  // Scaled weights u_i = exp(log w_i − m) ∈ [0, 1].
  double s1 = 0.0, s2 = 0.0;
  for (double x : log_w) {
    if (x == kNegInf) continue;
    const double u = std::exp(x - m);
    s1 += u;
    s2 += u * u;
  }
  const double nrep = static_cast<double>(replicas);
  const double mean_u = s1 / nrep;
  const double var_u = std::max(0.0, (s2 - nrep * mean_u * mean_u) / (nrep - 1.0));
  const double scale = std::exp(m);
  rep.p_hat = mean_u * scale;
  rep.std_error = std::sqrt(var_u / nrep) * scale;
  rep.log_p_hat = m + std::log(mean_u);
  rep.ess = s1 * s1 / s2;
  if (rep.ess < 10.0) rep.warnings.push_back("effective sample size below 10");
  return rep;
}

}  // namespace fluxldp
