#include <algorithm>
#include <cmath>
#include <limits>

#include "fluxldp/errors.hpp"
#include "fluxldp/fluid.hpp"
#include "fluxldp/harness.hpp"
#include "fluxldp/rate.hpp"

namespace fluxldp {

namespace {

using nlohmann::json;

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double rel_gap(double value, double reference) {
  return reference != 0.0 ? std::abs(value - reference) / std::abs(reference) : std::abs(value);
}

/// State test of an endpoint event on the oracle's state space; nullopt for path events.
std::optional<std::function<bool(const CountVec&)>> endpoint_test(const json& spec, const ReactionNetwork& net,
                                                                  std::int64_t volume) {
  if (!spec.is_object()) return std::nullopt;
  const std::string kind = spec.value("kind", "");
  const std::size_t ny = net.num_species();
  if (kind == "species_count") {
    const std::size_t y = net.species_index(spec.at("species").get<std::string>());
    const auto lo = spec.at("lo").get<std::int64_t>(), hi = spec.at("hi").get<std::int64_t>();
    return [y, lo, hi](const CountVec& s) { return lo <= s[y] && s[y] <= hi; };
  }
  if (kind == "flux_count") {
    const auto r = spec.at("reaction").get<std::size_t>();
    const auto lo = spec.at("lo").get<std::int64_t>(), hi = spec.at("hi").get<std::int64_t>();
    return [ny, r, lo, hi](const CountVec& s) { return lo <= s[ny + r] && s[ny + r] <= hi; };
  }
  if (kind == "flux") {
    const auto r = spec.at("reaction").get<std::size_t>();
    const double v = static_cast<double>(volume);
    const double a = spec.at("a").get<double>() * v, b = spec.at("b").get<double>() * v;
    const auto lo = static_cast<std::int64_t>(std::ceil(a - 1e-12 * (1.0 + std::abs(a) + std::abs(b))));
    const auto hi = static_cast<std::int64_t>(std::floor(b + 1e-12 * (1.0 + std::abs(a) + std::abs(b))));
    return [ny, r, lo, hi](const CountVec& s) { return lo <= s[ny + r] && s[ny + r] <= hi; };
  }
  return std::nullopt;
}

}  // namespace

nlohmann::json SlopeReport::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries) {
    json x{{"volume", e.volume}, {"estimate", e.estimate.to_json()}};
    x["rate"] = finite_or_null(e.rate);
    x["ci_low"] = finite_or_null(e.ci_low);
    x["ci_high"] = finite_or_null(e.ci_high);
    x["exact_rate"] = e.exact_rate ? finite_or_null(*e.exact_rate) : json(nullptr);
    x["exact_probability"] = e.exact_probability ? json(*e.exact_probability) : json(nullptr);
    entries_json.push_back(x);
  }
  return json{{"entries", entries_json},
              {"J_ref", j_ref},
              {"tube_proxy", tube_proxy},
              {"tube_proxy_scale", tube_proxy_scale},
              {"asymptote", finite_or_null(asymptote)},
              {"relative_gap", finite_or_null(relative_gap)},
              {"relative_gap_proxy", finite_or_null(relative_gap_proxy)},
              {"monotone_trend", monotone_trend},
              {"event", event},
              {"notes", notes}};
}

SlopeReport ldp_slope_experiment(const ExperimentConfig& cfg, const SlopeOptions& options) {
  const ReactionNetwork& net = cfg.network;
  const TiltProtocol tilt = cfg.tilt();
  SlopeReport rep;
  if (!tilt.is_zero() && !tilt.support_margin()) {
    rep.notes.push_back("tilt is not compactly supported in (0, T)");
  }
  const GridPath center = solve_perturbed(net, cfg.c0, tilt, cfg.horizon, cfg.steps);
  const RateReport J = evaluate_J(net, center, cfg.tolerances.continuity);
  if (!J.finite()) throw NumericalError("ldp_slope: J of the center is infinite (" + *J.infinity_reason + ")");
  rep.j_ref = J.value;

  const bool tube = cfg.event_spec.is_null() || cfg.event_spec.value("kind", "") == "tube";
  const json event_spec = cfg.event_spec.is_null() ? json{{"kind", "tube"}, {"radius", cfg.tube_radius}} : cfg.event_spec;
  const EventPredicate event = EventPredicate::from_json(event_spec, net, &center, &tilt);
  rep.event = event.description();

  // Tube-infimum proxy: the least scaled tilt whose solution still lies in the tube.
  rep.tube_proxy = rep.j_ref;
  if (tube && !tilt.is_zero()) {
    const double radius = event_spec.at("radius").get<double>();
    auto solution = [&](double s) { return solve_perturbed(net, cfg.c0, tilt.scaled(s), cfg.horizon, cfg.steps); };
    if (grid_sup_distance(solution(0.0), center) <= radius) {
      rep.tube_proxy_scale = 0.0;
    } else {
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (grid_sup_distance(solution(mid), center) <= radius ? hi : lo) = mid;
      }
      rep.tube_proxy_scale = hi;
    }
    const RateReport Jp = evaluate_J(net, solution(rep.tube_proxy_scale), cfg.tolerances.continuity);
    rep.tube_proxy = Jp.finite() ? Jp.value : rep.j_ref;
  } else if (!tube) {
    rep.notes.push_back("endpoint or custom event: tube proxy equals J_ref");
  }

  ImportanceOptions iopt;
  iopt.threads = cfg.threads;
  for (const auto v : cfg.volumes) {
    SlopeEntry e;
    e.volume = v;
    const CountVec n0 = cfg.initial_counts(v);
    e.estimate = importance_estimate(net, v, n0, cfg.horizon, event, tilt, cfg.replicas, cfg.seed, iopt);
    const double vd = static_cast<double>(v);
    e.rate = -e.estimate.log_p_hat / vd;
    const double se_log = e.estimate.p_hat > 0.0 ? e.estimate.std_error / e.estimate.p_hat
                                                 : std::numeric_limits<double>::infinity();
    e.ci_low = e.rate - 1.96 * se_log / vd;
    e.ci_high = e.rate + 1.96 * se_log / vd;
    for (const auto& w : e.estimate.warnings) rep.notes.push_back("V = " + std::to_string(v) + ": " + w);
    const auto exact_test = options.exact ? endpoint_test(event_spec, net, v) : std::nullopt;
    if (exact_test) {
      TransientOptions topt;
      topt.track_fluxes = event_spec.at("kind") != "species_count";
      topt.max_states = options.max_exact_states;
      topt.rel_tol = cfg.tolerances.oracle_rel;
      topt.truncation_threshold = cfg.tolerances.truncation;
      if (cfg.species_cap > 0) {
        topt.species_cap = {cfg.species_cap};
      } else {
        double top = 0.0;
        for (const auto& c : center.c) top = std::max(top, *std::max_element(c.begin(), c.end()));
        const auto n0max = *std::max_element(n0.begin(), n0.end());
        topt.species_cap = {std::max<std::int64_t>(4 * n0max + 50, static_cast<std::int64_t>(std::ceil(3.0 * top * vd)) + 50)};
      }
      try {
        const TransientDistribution dist = exact_transient(net, v, n0, cfg.horizon, topt);
        e.exact_probability = dist.mass(*exact_test);
        e.exact_rate = -std::log(*e.exact_probability) / vd;
      } catch (const OracleError& err) {
        rep.notes.push_back("V = " + std::to_string(v) + ": exact column skipped: " + err.what());
      }
    }
    rep.entries.push_back(std::move(e));
  }

  // Least squares rate(V) = a + b/V over finite entries.
  std::vector<std::pair<double, double>> pts;
  for (const auto& e : rep.entries) {
    if (std::isfinite(e.rate)) pts.emplace_back(1.0 / static_cast<double>(e.volume), e.rate);
  }
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.asymptote = (sy - b * sx) / n;
  } else if (pts.size() == 1) {
    rep.asymptote = pts.front().second;
  } else {
    rep.asymptote = std::numeric_limits<double>::quiet_NaN();
    rep.notes.push_back("no finite estimate; asymptote undefined");
  }
  rep.relative_gap = rel_gap(rep.asymptote, rep.j_ref);
  rep.relative_gap_proxy = rel_gap(rep.asymptote, rep.tube_proxy);

  // Trend: no step moves against the overall direction by more than its combined CI.
  rep.monotone_trend = pts.size() >= 2;
  if (rep.monotone_trend) {
    const double dir = rep.entries.back().rate - rep.entries.front().rate;
    for (std::size_t i = 1; i < rep.entries.size(); ++i) {
      const auto& a = rep.entries[i - 1];
      const auto& b = rep.entries[i];
      const double step = b.rate - a.rate;
      const double noise = (a.ci_high - a.ci_low + b.ci_high - b.ci_low) / 2.0;
      if (!std::isfinite(step) || (step * dir < 0.0 && std::abs(step) > noise)) rep.monotone_trend = false;
    }
  }
  return rep;
}

nlohmann::json GirsanovReport::to_json() const {
  json list = json::array();
  for (const auto& e : events) {
    list.push_back({{"event", e.description},
                    {"exact", e.exact},
                    {"estimate", e.estimate.to_json()},
                    {"z_score", finite_or_null(e.z_score)},
                    {"passed", e.passed}});
  }
  return json{{"events", list}, {"oracle_states", oracle_states}, {"truncated_mass", truncated_mass}, {"passed", passed}};
}

GirsanovReport girsanov_check(const ExperimentConfig& cfg, const GirsanovOptions& options) {
  const ReactionNetwork& net = cfg.network;
  const std::int64_t v = cfg.volumes.front();
  const CountVec n0 = cfg.initial_counts(v);
  const TiltProtocol tilt = cfg.tilt();

  TransientOptions topt;
  if (cfg.species_cap > 0) topt.species_cap = {cfg.species_cap};
  topt.rel_tol = cfg.tolerances.oracle_rel;
  topt.truncation_threshold = cfg.tolerances.truncation;
  const TransientDistribution dist = exact_transient(net, v, n0, cfg.horizon, topt);

  GirsanovReport rep;
  rep.oracle_states = dist.states.size();
  rep.truncated_mass = dist.truncated_mass;

  // Marginal law of the first species and its quantiles.
  std::int64_t top = 0;
  for (const auto& s : dist.states) top = std::max(top, s[0]);
  RealVec pmf(static_cast<std::size_t>(top) + 1, 0.0);
  for (std::size_t i = 0; i < dist.states.size(); ++i) pmf[static_cast<std::size_t>(dist.states[i][0])] += dist.probability[i];
  auto q = [&](double level) {
    double acc = 0.0;
    for (std::size_t n = 0; n < pmf.size(); ++n) {
      acc += pmf[n];
      if (acc >= level) return static_cast<std::int64_t>(n);
    }
    return top;
  };
  const std::int64_t q05 = q(0.05), q25 = q(0.25), q75 = q(0.75), q95 = q(0.95);
  const std::vector<std::pair<std::int64_t, std::int64_t>> bands{
      {0, q05}, {0, q25}, {q25 + 1, q75}, {q75 + 1, top}, {q95, top}};

  ImportanceOptions iopt;
  iopt.threads = cfg.threads;
  iopt.log_ratio = options.log_ratio;
  rep.passed = true;
  for (const auto& [lo, hi] : bands) {
    const EventPredicate event = EventPredicate::species_count_between(net, 0, lo, hi);
    GirsanovEvent g;
    g.description = event.description();
    g.exact = dist.mass([lo = lo, hi = hi](const CountVec& s) { return lo <= s[0] && s[0] <= hi; });
    g.estimate = importance_estimate(net, v, n0, cfg.horizon, event, tilt, cfg.replicas, cfg.seed, iopt);
    const double diff = std::abs(g.estimate.p_hat - g.exact);
    g.z_score = g.estimate.std_error > 0.0 ? diff / g.estimate.std_error
                                           : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    g.passed = g.z_score <= options.z_threshold;
    rep.passed = rep.passed && g.passed;
    rep.events.push_back(std::move(g));
  }
  return rep;
}

}  // namespace fluxldp
