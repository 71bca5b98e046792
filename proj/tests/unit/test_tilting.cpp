#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "fluxldp/errors.hpp"
#include "fluxldp/fluid.hpp"
#include "fluxldp/tilting.hpp"
#include "helpers.hpp"

using namespace fluxldp;

namespace {

const ReactionNetwork& birth() {
  static const auto net = parse_network("0 -> A @ const(1.0)");
  return net;
}

const ReactionNetwork& birth_death() {
  static const auto net = parse_network("0 -> A @ const(1.0); A -> 0 @ ma(2.0)");
  return net;
}

/// exp(M) by scaling and squaring of a truncated Taylor series.
Eigen::MatrixXd dense_expm(const Eigen::MatrixXd& m) {
  int squarings = 0;
  double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const Eigen::MatrixXd a = m / std::pow(2.0, squarings);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(m.rows(), m.cols()), sum = term;
  for (int k = 1; k < 30; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace

TEST_SUITE("tilting") {

TEST_CASE("log-likelihood ratio of pure birth matches the Poisson closed form") {
  const double theta = 0.8, v = 50.0, T = 1.0;
  const auto tilt = TiltProtocol::constant({theta}, T);
  for (std::size_t n : {0u, 1u, 37u, 120u}) {
    JumpPath p{50, {0}, T, {}};
    for (std::size_t i = 0; i < n; ++i) p.events.push_back({T * (i + 0.5) / static_cast<double>(n), 0});
    const double closed = static_cast<double>(n) * theta - v * T * (std::exp(theta) - 1.0);
    const double pmf_ratio = testutil::log_poisson_pmf(v * T * std::exp(theta), static_cast<std::int64_t>(n)) -
                             testutil::log_poisson_pmf(v * T, static_cast<std::int64_t>(n));
    CHECK(std::abs(log_likelihood_ratio(birth(), p, tilt) - closed) < 1e-10);
    CHECK(std::abs(closed - pmf_ratio) < 1e-9);
  }
  JumpPath q{50, {0}, T, {{0.3, 0}}};
  CHECK(log_likelihood_ratio(birth(), q, TiltProtocol::zero(1, T)) == 0.0);
}

TEST_CASE("likelihood ratio with a time-dependent tilt") {
  // ζ(t) = t: Σζ(t_i) − V ∫₀¹ (e^t − 1) dt.
  const TiltProtocol tilt(1.0, {{0.0}, {1.0}});
  JumpPath p{20, {0}, 1.0, {{0.25, 0}, {0.5, 0}}};
  CHECK(log_likelihood_ratio(birth(), p, tilt) == doctest::Approx(0.75 - 20.0 * (std::exp(1.0) - 2.0)).epsilon(1e-13));
}

TEST_CASE("reweighting is unbiased") {
  const auto tilt = TiltProtocol::constant({0.3, -0.2}, 1.0);
  const std::int64_t n0[] = {20};
  const auto rep = importance_estimate(birth_death(), 20, n0, 1.0, EventPredicate::always(), tilt, 10000, 3);
  CHECK(std::abs(rep.p_hat - 1.0) <= 3.0 * rep.std_error);
  const auto none = importance_estimate(birth_death(), 20, n0, 1.0, EventPredicate::never(), tilt, 100, 3);
  CHECK(none.p_hat == 0.0);
  CHECK(none.hits == 0);
}

TEST_CASE("tilted estimate of a Poisson tail") {
  const std::int64_t n0[] = {0};
  const auto event = EventPredicate::flux_count_between(0, 200, 1'000'000);
  const auto tilt = TiltProtocol::constant({std::log(2.0)}, 1.0);
  const auto rep = importance_estimate(birth(), 100, n0, 1.0, event, tilt, 20000, 9);
  double tail = 0.0;
  for (std::int64_t k = 200; k < 600; ++k) tail += testutil::poisson_pmf(100.0, k);
  CHECK(std::abs(rep.p_hat - tail) <= 3.0 * rep.std_error);
  CHECK(rep.log_p_hat == doctest::Approx(std::log(rep.p_hat)));
  const auto impossible = EventPredicate::species_count_between(birth(), 0, -5, -1);
  CHECK(importance_estimate(birth(), 100, n0, 1.0, impossible, tilt, 100, 9).p_hat == 0.0);
}

TEST_CASE("exact transient law of pure birth is Poisson") {
  const std::int64_t n0[] = {0};
  TransientOptions opt;
  opt.species_cap = {200};
  const auto dist = exact_transient(birth(), 40, n0, 1.5, opt);
  double worst = 0.0;
  for (std::size_t i = 0; i < dist.states.size(); ++i) {
    worst = std::max(worst, std::abs(dist.probability[i] - testutil::poisson_pmf(60.0, dist.states[i][0])));
  }
  CHECK(worst < 1e-10);
  const auto still = exact_transient(birth(), 40, n0, 0.0, opt);
  CHECK(still.probability[0] == 1.0);
  CHECK(still.states[0] == CountVec{0});
}

TEST_CASE("exact transient of A <-> B matches a dense matrix exponential") {
  const auto ab = parse_network("A -> B @ ma(1.3); B -> A @ ma(0.4)");
  const std::int64_t n0[] = {3, 0};
  TransientOptions opt;
  opt.rel_tol = 1e-14;
  const auto dist = exact_transient(ab, 5, n0, 0.9, opt);
  // Generator over the number of B molecules.
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(4, 4);
  for (int b = 0; b <= 3; ++b) {
    const int na = 3 - b;
    if (na > 0) gen(b, b + 1) = 1.3 * na;
    if (b > 0) gen(b, b - 1) = 0.4 * b;
    gen(b, b) = -gen.row(b).sum();
  }
  const Eigen::MatrixXd p = dense_expm(gen * 0.9);
  REQUIRE(dist.states.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto b = dist.states[i][1];
    CHECK(dist.states[i][0] + b == 3);
    CHECK(std::abs(dist.probability[i] - p(0, b)) < 1e-12);
  }
}

TEST_CASE("oracle limits") {
  const std::int64_t n0[] = {0};
  TransientOptions small;
  small.species_cap = {5};
  CHECK_THROWS_AS(exact_transient(birth(), 100, n0, 1.0, small), OracleError);
  TransientOptions tiny;
  tiny.max_states = 10;
  tiny.species_cap = {1000};
  CHECK_THROWS_AS(exact_transient(birth(), 100, n0, 1.0, tiny), OracleError);
}

TEST_CASE("tilted simulation matches the tilted oracle in total variation") {
  const double theta[] = {0.4, -0.3};
  const auto tilt = TiltProtocol::constant({theta[0], theta[1]}, 1.0);
  const std::int64_t n0[] = {20};
  TransientOptions opt;
  opt.species_cap = {99};
  opt.rate_multipliers = {std::exp(theta[0]), std::exp(theta[1])};
  const auto dist = exact_transient(birth_death(), 20, n0, 1.0, opt);
  std::map<std::int64_t, double> hist;
  const std::size_t replicas = 100000;
  for (std::size_t i = 0; i < replicas; ++i) {
    SimulateOptions s;
    s.stream = i;
    const auto p = simulate(birth_death(), 20, n0, 1.0, 21, &tilt, s);
    hist[count_state(birth_death(), p, 1.0).n[0]] += 1.0 / static_cast<double>(replicas);
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < dist.states.size(); ++i) {
    tv += std::abs(dist.probability[i] - hist[dist.states[i][0]]);
    hist.erase(dist.states[i][0]);
  }
  for (const auto& [n, p] : hist) tv += p;
  CHECK(0.5 * tv < 0.02);
}

TEST_CASE("tube distance is exact on a constructed path") {
  std::vector<RealVec> c{{1.0}, {1.0}}, w{{0.0}, {0.0}};
  const GridPath center(1.0, c, w);
  const JumpPath p{10, {10}, 1.0, {{0.5, 0}}};
  // After the birth at t = 0.5: c = 1.1, w = 0.1.
  CHECK(tube_distance(birth(), p, center) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(EventPredicate::tube(birth(), center, 0.11)(p));
  CHECK_FALSE(EventPredicate::tube(birth(), center, 0.09)(p));
  const double c0[] = {1.0};
  const auto ramp = solve_rre(birth(), c0, 1.0, 4);
  const JumpPath flat{10, {10}, 1.0, {}};
  CHECK(tube_distance(birth(), flat, ramp) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("event specs") {
  const JumpPath p{10, {3}, 1.0, {{0.2, 0}, {0.4, 1}, {0.5, 0}}};
  CHECK(EventPredicate::from_json({{"kind", "flux_count"}, {"reaction", 0}, {"lo", 2}, {"hi", 2}}, birth_death())(p));
  CHECK(EventPredicate::from_json({{"kind", "flux"}, {"reaction", 0}, {"a", 0.2}, {"b", 0.2}}, birth_death())(p));
  CHECK_FALSE(EventPredicate::from_json({{"kind", "flux"}, {"reaction", 1}, {"a", 0.2}, {"b", 0.3}}, birth_death())(p));
  CHECK(EventPredicate::from_json({{"kind", "species_count"}, {"species", "A"}, {"lo", 4}, {"hi", 4}}, birth_death())(p));
  CHECK_THROWS_AS(EventPredicate::from_json({{"kind", "nope"}}, birth_death()), ValidationError);
  CHECK_THROWS_AS(EventPredicate::from_json({{"kind", "tube"}, {"radius", 0.1}}, birth_death()), ValidationError);
}

}  // TEST_SUITE
