#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fluxldp/errors.hpp"
#include "fluxldp/fluid.hpp"
#include "fluxldp/rate.hpp"

using namespace fluxldp;

namespace {

GridPath linear_birth_path(double a, double T, std::size_t K) {
  std::vector<RealVec> c, w;
  for (std::size_t k = 0; k <= K; ++k) {
    const double t = T * static_cast<double>(k) / static_cast<double>(K);
    c.push_back({a * t});
    w.push_back({a * t});
  }
  return GridPath(T, c, w);
}

double scalar_entropy(double j, double jh) { return j == 0.0 ? jh : j * std::log(j / jh) - j + jh; }

}  // namespace

TEST_SUITE("ratefunctional") {

TEST_CASE("relative entropy special values") {
  for (double x : {0.1, 1.0, 7.5}) CHECK(rel_entropy(x, x) == 0.0);
  CHECK(rel_entropy(0.0, 3.0) == 3.0);
  CHECK(std::abs(rel_entropy(2.0, 1.0) - (2.0 * std::log(2.0) - 1.0)) < 1e-12);
  CHECK(rel_entropy(1.0, 0.0) == std::numeric_limits<double>::infinity());
  CHECK(rel_entropy(0.0, 0.0) == 0.0);
}

TEST_CASE("hamiltonian") {
  const auto net = parse_network("A -> 0 @ ma(2)");
  const double c[] = {1.0};
  const double z0[] = {0.0}, zl[] = {std::log(2.0)};
  CHECK(hamiltonian(net, c, z0) == 0.0);
  CHECK(hamiltonian(net, c, zl) == doctest::Approx(2.0).epsilon(1e-15));
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double cc[] = {pos(gen)};
    const double a[] = {u(gen), u(gen)}, b[] = {u(gen), u(gen)};
    const double m[] = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
    CHECK(hamiltonian(bd, cc, m) <= 0.5 * (hamiltonian(bd, cc, a) + hamiltonian(bd, cc, b)) + 1e-12);
  }
}

TEST_CASE("J vanishes on the reaction rate equation") {
  const auto net = parse_network("A + B -> C @ ma(1); C -> A + B @ ma(0.5); 0 -> A @ const(0.2)");
  const double c0[] = {1.0, 0.8, 0.1};
  const auto path = solve_rre(net, c0, 1.0, 2000);
  const auto rep = evaluate_J(net, path);
  REQUIRE(rep.finite());
  CHECK(rep.value < 1e-8);
}

TEST_CASE("J of tilted and linear pure-birth paths") {
  const auto birth = parse_network("0 -> A @ const(1)");
  const double theta = 0.6;
  const double z0[] = {0.0};
  const auto tilted = solve_perturbed(birth, z0, TiltProtocol::constant({theta}, 1.0), 1.0, 500);
  CHECK(evaluate_J(birth, tilted).value ==
        doctest::Approx(theta * std::exp(theta) - std::exp(theta) + 1.0).epsilon(1e-10));
  const auto lin = linear_birth_path(2.0, 1.0, 100);
  CHECK(std::abs(evaluate_J(birth, lin).value - (2.0 * std::log(2.0) - 1.0)) < 1e-12);
  const auto lin3 = linear_birth_path(2.0, 3.0, 100);
  CHECK(evaluate_J(birth, lin3).value == doctest::Approx(3.0 * (2.0 * std::log(2.0) - 1.0)).epsilon(1e-12));
}

TEST_CASE("J infinity reasons") {
  const auto birth = parse_network("0 -> A @ const(1)");
  auto path = linear_birth_path(1.0, 1.0, 10);
  path.c[5][0] += 0.1;
  CHECK(evaluate_J(birth, path).infinity_reason == std::string(kContinuityViolation));

  auto back = linear_birth_path(1.0, 1.0, 10);
  back.w[6][0] = back.w[4][0];
  back.c[6][0] = back.c[4][0];
  CHECK(evaluate_J(birth, back).infinity_reason == std::string(kNegativeFlux));

  const auto decay = parse_network("A -> 0 @ ma(1)");
  auto drain = [](double c0, double rate) {
    std::vector<RealVec> c, w;
    for (std::size_t k = 0; k <= 10; ++k) {
      w.push_back({rate * 0.1 * static_cast<double>(k)});
      c.push_back({c0 - w.back()[0]});
    }
    return GridPath(1.0, c, w);
  };
  CHECK(evaluate_J(decay, drain(1.0, 0.5)).finite());
  CHECK(evaluate_J(decay, drain(0.5, 1.0)).infinity_reason == std::string(kAbsoluteContinuity));
  CHECK(evaluate_J(decay, drain(0.5, 0.5)).infinity_reason == std::string(kAbsoluteContinuity));
}

TEST_CASE("G and the optimal tilt") {
  const auto birth = parse_network("0 -> A @ const(1)");
  const auto lin = linear_birth_path(2.0, 1.0, 50);
  CHECK(evaluate_G(birth, lin, TiltProtocol::zero(1, 1.0)) == 0.0);
  const auto opt = optimal_tilt(birth, lin, 10.0);
  for (const auto& node : opt.nodes()) CHECK(node[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(evaluate_G(birth, lin, opt) == doctest::Approx(evaluate_J(birth, lin).value).epsilon(1e-12));

  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const double c0[] = {1.0};
  const std::size_t K = 2000;
  const auto rre = solve_rre(bd, c0, 1.0, K);
  const auto rre_tilt = optimal_tilt(bd, rre, 40.0);
  const auto& nodes = rre_tilt.nodes();
  // Centered differences inside, one-sided at the ends.
  for (std::size_t k = 1; k < K; ++k) {
    CHECK(std::abs(nodes[k][0]) < 1e-6);
    CHECK(std::abs(nodes[k][1]) < 1e-6);
  }
  for (std::size_t k : {std::size_t{0}, K}) CHECK(std::abs(nodes[k][1]) < 2.0 / static_cast<double>(K));

  const auto flat = linear_birth_path(0.0, 1.0, 20);
  double previous = -1.0;
  for (double n : {1.0, 2.0, 5.0, 10.0, 20.0}) {
    const auto z = optimal_tilt(birth, flat, n);
    CHECK(z.nodes()[3][0] == -n);
    const double g = evaluate_G(birth, flat, z);
    CHECK(g > previous);
    CHECK(g <= evaluate_J(birth, flat).value + 1e-12);
    previous = g;
  }
  CHECK(previous == doctest::Approx(1.0 - std::exp(-20.0)).epsilon(1e-12));
}

TEST_CASE("Fenchel-Young bound on random tilts") {
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const double c0[] = {1.0};
  const auto path = solve_perturbed(bd, c0, TiltProtocol::constant({0.4, -0.2}, 1.0), 1.0, 200);
  const double J = evaluate_J(bd, path).value;
  std::mt19937_64 gen(17);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<RealVec> nodes(11, RealVec(2));
    for (auto& n : nodes) n = {g(gen), g(gen)};
    CHECK(evaluate_G(bd, path, TiltProtocol(1.0, nodes)) <= J + 1e-8);
  }
}

TEST_CASE("contraction cell against a brute-force scan") {
  const auto ab = parse_network("A -> B @ ma(1); B -> A @ ma(1)");
  const double c[] = {0.5, 0.5};
  const double still[] = {0.0, 0.0};
  const auto zero = contraction_cell(ab, c, still);
  CHECK(std::abs(zero.value) < 1e-12);
  CHECK(zero.j[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(zero.j[1] == doctest::Approx(0.5).epsilon(1e-9));

  const double d = 0.5;
  const double cdot[] = {-d, d};
  auto cost = [&](double jm) { return scalar_entropy(jm + d, 0.5) + scalar_entropy(jm, 0.5); };
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
  CHECK(std::abs(cell.value - best) < 1e-6);
  CHECK(std::abs(cell.j[1] - 0.5 * (lo + hi)) < 1e-5);
  CHECK(std::abs(cell.value - cell.dual_value) < 1e-9);
}

TEST_CASE("contraction infeasibility") {
  const auto decay = parse_network("A -> 0 @ ma(1)");
  const double c[] = {1.0};
  const double up[] = {1.0};
  CHECK(contraction_cell(decay, c, up).infinity_reason == std::string(kNegativeFlux));
  const auto two = parse_network("A -> B @ ma(1); 0 -> B @ const(1)");
  const double empty_a[] = {0.0, 1.0};
  const double move[] = {-0.5, 0.5};
  CHECK(contraction_cell(two, empty_a, move).infinity_reason == std::string(kAbsoluteContinuity));
}

TEST_CASE("contraction of the RRE trajectory vanishes") {
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const double c0[] = {1.0};
  const auto rre = solve_rre(bd, c0, 1.0, 1000);
  const auto I = contraction_I(bd, rre);
  REQUIRE_FALSE(I.infinity_reason.has_value());
  CHECK(I.value < 1e-8);
  const auto lin = linear_birth_path(2.0, 1.0, 50);
  const auto birth = parse_network("0 -> A @ const(1)");
  CHECK(contraction_I(birth, lin).value == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-9));
}

}  // TEST_SUITE
