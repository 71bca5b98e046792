#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fluxldp/assumptions.hpp"
#include "fluxldp/errors.hpp"
#include "fluxldp/fluid.hpp"
#include "fluxldp/harness.hpp"
#include "fluxldp/jump_path.hpp"
#include "fluxldp/rate.hpp"
#include "fluxldp/regularity.hpp"
#include "fluxldp/tilting.hpp"

using namespace fluxldp;
using nlohmann::json;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

const double kLn2Cost = 2.0 * std::log(2.0) - 1.0;

Outcome relative_entropy() {
  bool ok = true;
  double worst = 0.0;
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(1e-6, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double jh = u(gen);
    ok = ok && rel_entropy(jh, jh) == 0.0 && rel_entropy(0.0, jh) == jh;
    ok = ok && std::isfinite(rel_entropy(u(gen), jh));
    ok = ok && rel_entropy(u(gen), 0.0) == std::numeric_limits<double>::infinity();
  }
  ok = ok && rel_entropy(0.0, 0.0) == 0.0;
  worst = std::abs(rel_entropy(2.0, 1.0) - kLn2Cost);
  ok = ok && worst <= 1e-12;
  return {ok, fmt("|s(2|1) - (2ln2-1)| = %.2e", worst)};
}

std::string random_side(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> pick(0, 5);
  static const char* sides[] = {"0", "A", "B", "2 A", "A + B", "2 B"};
  return sides[pick(gen)];
}

Outcome duality() {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> rate(0.5, 2.0), conc(0.5, 1.5), amp(-1.0, 1.0), phase(0.0, 6.3);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_rel = 0.0, worst_excess = -std::numeric_limits<double>::infinity();
  int paths = 0, tilts = 0;
  while (paths < 50) {
    std::ostringstream dsl;
    for (int r = 0; r < 3; ++r) {
      std::string lhs = random_side(gen), rhs = random_side(gen);
      while (rhs == lhs) rhs = random_side(gen);
      const std::string law = lhs == "0" ? "const" : "ma";
      dsl << lhs << " -> " << rhs << " @ " << law << "(" << rate(gen) << ");";
    }
    ReactionNetwork net = parse_network(dsl.str());
    if (net.num_species() != 2) continue;
    const double c0[] = {conc(gen), conc(gen)};
    const std::size_t K = 400;
    std::vector<RealVec> nodes;
    double a[3], p[3];
    for (int r = 0; r < 3; ++r) {
      a[r] = amp(gen);
      p[r] = phase(gen);
    }
    for (std::size_t k = 0; k <= K; ++k) {
      const double t = static_cast<double>(k) / K;
      nodes.push_back({a[0] * std::sin(3.0 * t + p[0]), a[1] * std::sin(2.0 * t + p[1]), a[2] * std::cos(t + p[2])});
    }
    const GridPath path = solve_perturbed(net, c0, TiltProtocol(1.0, nodes), 1.0, K);
    const double J = evaluate_J(net, path).value;
    if (!std::isfinite(J)) return {false, "random path has infinite J"};
    const double G = evaluate_G(net, path, optimal_tilt(net, path, 40.0));
    worst_rel = std::max(worst_rel, std::abs(G - J) / std::max(J, 1e-300));
    for (int i = 0; i < 4; ++i) {
      std::vector<RealVec> z(21, RealVec(3));
      for (auto& row : z) row = {normal(gen), normal(gen), normal(gen)};
      worst_excess = std::max(worst_excess, evaluate_G(net, path, TiltProtocol(1.0, z)) - J);
      ++tilts;
    }
    ++paths;
  }
  return {worst_rel <= 1e-6 && worst_excess <= 1e-8 && tilts == 200,
          fmt("max |G*-J|/J = %.2e over 50 paths, max G-J = %.2e over 200 tilts", worst_rel, worst_excess)};
}

Outcome lln() {
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const double c0[] = {1.0};
  const double vols[] = {100.0, 1000.0, 10000.0};
  std::vector<double> medians;
  for (double v : vols) medians.push_back(lln_gap(bd, static_cast<std::int64_t>(v), c0, 1.0, 200, 31).median);
  const double slope = loglog_slope(vols, medians);
  return {std::abs(slope + 0.5) <= 0.15,
          fmt("medians %.4f, %.4f, %.4f; slope %.3f", medians[0], medians[1], medians[2], slope)};
}

Outcome girsanov() {
  const auto birth = parse_network("0 -> A @ const(1)");
  double worst = 0.0;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double theta : {-0.7, 0.0, 0.4, 1.3}) {
    for (std::int64_t v : {10, 50, 200}) {
      for (std::size_t n : {0u, 3u, 60u, 250u}) {
        std::vector<double> times;
        for (std::size_t i = 0; i < n; ++i) times.push_back(u(gen));
        std::sort(times.begin(), times.end());
        JumpPath p{v, {0}, 1.0, {}};
        for (double t : times) p.events.push_back({t, 0});
        const double closed = static_cast<double>(n) * theta - static_cast<double>(v) * (std::exp(theta) - 1.0);
        const double lr = log_likelihood_ratio(birth, p, TiltProtocol::constant({theta}, 1.0));
        worst = std::max(worst, std::abs(lr - closed));
      }
    }
  }
  const json cfg{{"network", {{"dsl", "0 -> A @ const(1); A -> 0 @ ma(2)"}}},
                 {"c0", {0.5}},
                 {"V", {20}},
                 {"replicas", 100000},
                 {"seed", 404},
                 {"species_cap", 99},
                 {"tilt", {{"kind", "constant"}, {"values", {0.3, -0.2}}}},
                 {"out", "acceptance_out"}};
  const auto rep = girsanov_check(ExperimentConfig::from_json(cfg));
  double zmax = 0.0;
  for (const auto& e : rep.events) zmax = std::max(zmax, e.z_score);
  return {worst <= 1e-10 && rep.passed && rep.events.size() == 5 && rep.oracle_states <= 100,
          fmt("closed-form error %.2e; %g oracle states; max z over 5 events %.2f", worst,
              static_cast<double>(rep.oracle_states), zmax)};
}

Outcome martingale() {
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const std::int64_t n0[] = {50};
  const double lin_w[] = {1.0, -1.0}, lin_cw[] = {1.0, 0.5, 0.5};
  const double exp_w[] = {0.2, -0.1}, exp_cw[] = {0.3, 0.2, -0.1};
  struct Case {
    TestFunction kind;
    std::span<const double> zeta;
  } cases[] = {{TestFunction::linear, lin_w},
               {TestFunction::linear, lin_cw},
               {TestFunction::exponential, exp_w},
               {TestFunction::exponential, exp_cw}};
  bool ok = true;
  double worst = 0.0;
  std::uint64_t seed = 50;
  for (const auto& c : cases) {
    const auto r = martingale_residual(bd, 50, n0, 1.0, c.kind, c.zeta, 10000, seed++);
    ok = ok && std::abs(r.mean) <= 3.0 * r.std_error;
    worst = std::max(worst, std::abs(r.mean) / r.std_error);
  }
  return {ok, fmt("max |mean|/stderr = %.2f over 4 test functions", worst)};
}

Outcome poisson_anchor() {
  const json cfg{{"network", {{"dsl", "0 -> A @ const(1)"}}},
                 {"c0", {0.0}},
                 {"V", {50, 100, 200, 400}},
                 {"replicas", 20000},
                 {"steps", 200},
                 {"seed", 606},
                 {"tilt", {{"kind", "constant"}, {"values", {std::log(2.0)}}}},
                 {"event", {{"kind", "flux"}, {"reaction", 0}, {"a", 2.0}, {"b", 2.0}}},
                 {"out", "acceptance_out"}};
  const auto rep = ldp_slope_experiment(ExperimentConfig::from_json(cfg));
  bool ok = rep.entries.size() == 4;
  double exact_err = 0.0, resid_ratio = 0.0, is_ratio = 0.0;
  for (const auto& e : rep.entries) {
    const double v = static_cast<double>(e.volume);
    // log P(N = 2V) for N ~ Poisson(V).
    const double log_pmf = 2.0 * v * std::log(v) - v - std::lgamma(2.0 * v + 1.0);
    const double exact = -log_pmf / v;
    if (!e.exact_rate) return {false, "exact column missing at V = " + std::to_string(e.volume)};
    exact_err = std::max(exact_err, std::abs(*e.exact_rate - exact));
    resid_ratio = std::max(resid_ratio, std::abs(exact - kLn2Cost) / (std::log(v) / v));
    const double half_width = e.ci_high - e.rate;
    is_ratio = std::max(is_ratio, std::abs(e.rate - exact) / (2.0 * half_width));
  }
  ok = ok && exact_err <= 1e-10 && resid_ratio <= 1.0 && is_ratio <= 1.0;
  return {ok, fmt("exact vs lgamma %.2e; residual / (log V/V) <= %.3f; IS gap / 2 CI <= %.3f", exact_err,
                  resid_ratio, is_ratio)};
}

Outcome regularization() {
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const std::int64_t n0[] = {5000};
  const auto jp = simulate(bd, 10000, n0, 1.0, 42);
  const GridPath grid = to_grid(bd, jp, 25);
  const double J = evaluate_J(bd, grid).value;
  if (!std::isfinite(J)) return {false, "input J is infinite"};
  bool admissible = true, decreasing = true;
  double previous = std::numeric_limits<double>::infinity();
  std::vector<double> gaps;
  for (double d : {0.2, 0.1, 0.05}) {
    const auto res = regularize_to_admissible(bd, grid, d);
    admissible = admissible && res.report.member();
    const double gap = std::abs(evaluate_J(bd, res.path).value - J);
    decreasing = decreasing && gap < previous;
    previous = gap;
    gaps.push_back(gap);
  }
  const double budget = J < 0.2 ? 0.01 : 0.05 * J;
  const bool ok = admissible && decreasing && gaps.back() < budget;
  std::string detail = fmt("J = %.4f; gaps %.4f, %.4f, %.4f", J, gaps[0], gaps[1], gaps[2]) +
                       fmt("; final gap budget %.4f", budget) + (admissible ? "; admissible" : "; not admissible");
  return {ok, detail};
}

Outcome contraction() {
  const auto ab = parse_network("A -> B @ ma(1); B -> A @ ma(1)");
  const double c[] = {0.5, 0.5};
  const double d = 0.5;
  const double cdot[] = {-d, d};
  auto entropy = [](double j, double jh) { return j == 0.0 ? jh : j * std::log(j / jh) - j + jh; };
  auto cost = [&](double jm) { return entropy(jm + d, 0.5) + entropy(jm, 0.5); };
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (int i = 0; i <= 300000; ++i) {
    const double jm = 3.0 * i / 300000.0;
    if (cost(jm) < best) {
      best = cost(jm);
      arg = jm;
    }
  }
  double lo = std::max(0.0, arg - 1e-5), hi = arg + 1e-5;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (cost(m1) < cost(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  best = cost(0.5 * (lo + hi));
  const auto cell = contraction_cell(ab, c, cdot);
  const double cell_err = std::abs(cell.value - best);
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const double c0[] = {1.0};
  const auto I = contraction_I(bd, solve_rre(bd, c0, 1.0, 1000));
  const bool ok = cell_err <= 1e-6 && !I.infinity_reason && I.value < 1e-8;
  return {ok, fmt("cell vs scan %.2e; I(RRE) = %.2e", cell_err, I.value)};
}

Outcome validator() {
  struct Example {
    const char* dsl;
    std::vector<double> c0;
    int exponent;
  };
  const Example examples[] = {
      {"0 -> A @ const(1); A -> 0 @ ma(2)", {1.0}, 1},
      {"A -> B @ ma(1); B -> A @ ma(1)", {0.5, 0.5}, 1},
      {"A + B -> C @ ma(1); C -> A + B @ ma(0.5)", {1.0, 0.8, 0.1}, 2},
      {"2 H2 + O2 -> 2 H2O @ ma(1)", {1.0, 1.0, 0.0}, 3},
      {"2 A + B -> C @ ma(1); C -> 2 A + B @ ma(1)", {1.0, 1.0, 1.0}, 3},
  };
  bool ok = true;
  int passed = 0;
  for (const auto& ex : examples) {
    const auto net = parse_network(ex.dsl);
    const auto rep = validate_assumptions(net, ex.c0, 0.2, 4);
    const bool good = rep.cutoff_below.passed && rep.convergence.passed && rep.monotonicity.passed &&
                      rep.superhomogeneity.passed && rep.psi_exponent == ex.exponent;
    ok = ok && good;
    passed += good;
  }
  CustomKinetics decreasing;
  decreasing.name = "one-minus-c";
  decreasing.macro = [](std::span<const double> c) { return std::max(0.0, 1.0 - c[0]); };
  const double half[] = {0.5};
  const auto mono = validate_assumptions(ReactionNetwork({"A"}, {Reaction{{1}, {0}, {}, decreasing}}), half, 0.2, 6);
  CustomKinetics leaky;
  leaky.name = "leaky";
  leaky.macro = [](std::span<const double> c) { return 1.0 + c[0]; };
  const double low[] = {0.2};
  const auto cut = validate_assumptions(ReactionNetwork({"A"}, {Reaction{{1}, {0}, {}, leaky}}), low, 0.2, 6);
  const bool planted = !mono.monotonicity.passed && !mono.monotonicity.witnesses.empty() &&
                       !cut.cutoff_below.passed && !cut.cutoff_below.witnesses.empty();
  ok = ok && planted;
  return {ok, fmt("%g of 5 mass-action examples pass; planted violations ", passed) +
                  (planted ? "detected with witnesses" : "missed")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "relative entropy", 1.0, relative_entropy},
      {2, "duality", 60.0, duality},
      {3, "law of large numbers", 120.0, lln},
      {4, "girsanov exactness", 180.0, girsanov},
      {5, "martingale residuals", 60.0, martingale},
      {6, "poisson LDP anchor", 120.0, poisson_anchor},
      {7, "approximation pipeline", 60.0, regularization},
      {8, "contraction", 30.0, contraction},
      {9, "assumption validator", 30.0, validator},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = out.passed && in_time;
    failures += !pass;
    std::printf("criterion %d %s: %s (%s; %.2fs of %.0fs%s)\n", c.id, c.name, pass ? "PASS" : "FAIL",
                out.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
