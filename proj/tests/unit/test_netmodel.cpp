#include <doctest.h>

#include <cmath>

#include "fluxldp/assumptions.hpp"
#include "fluxldp/errors.hpp"
#include "fluxldp/network.hpp"

using namespace fluxldp;

TEST_SUITE("netmodel") {

TEST_CASE("parse water formation") {
  const auto net = parse_network("2 H2 + O2 -> 2 H2O @ ma(0.3)");
  CHECK(net.species() == std::vector<std::string>{"H2", "O2", "H2O"});
  REQUIRE(net.num_reactions() == 1);
  const auto& r = net.reaction(0);
  CHECK(r.alpha == std::vector<int>{2, 1, 0});
  CHECK(r.beta == std::vector<int>{0, 0, 2});
  CHECK(r.gamma == std::vector<int>{-2, -1, 2});
  CHECK(r.total_order() == 3);
  CHECK(std::get<MassAction>(r.kinetics).kappa == 0.3);
}

TEST_CASE("null reaction has zero gamma") {
  const auto net = parse_network("A -> A @ ma(1.0)");
  CHECK(net.reaction(0).gamma == std::vector<int>{0});
}

TEST_CASE("birth-death matches a hand-built network") {
  const auto parsed = parse_network("0 -> A @ const(1.0); A -> 0 @ ma(2.0)");
  const ReactionNetwork built({"A"}, {Reaction{{0}, {1}, {}, ConstantRate{1.0}}, Reaction{{1}, {0}, {}, MassAction{2.0}}});
  CHECK(parsed == built);
  CHECK(parsed.gamma(0, 0) == 1);
  CHECK(parsed.gamma(0, 1) == -1);
}

TEST_CASE("render, parse and JSON round trips") {
  const auto net = parse_network(
      "species X Y Z\n"
      "X + Y -> 2 Z @ ma(1.5)   # comment\n"
      "2 Z -> X + Y @ ma(0.25)\n"
      "0 -> X @ const(3)\n");
  CHECK(parse_network(render_network(net)) == net);
  CHECK(network_from_json(network_to_json(net)) == net);
  CHECK(net.species() == std::vector<std::string>{"X", "Y", "Z"});
}

TEST_CASE("parse errors carry positions") {
  try {
    parse_network("A -> B @ ma(1)\nA -> @ ma(1)");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_network("A -> B @ ma(-1)"), ParseError);
  CHECK_THROWS_AS(parse_network("A -> B @ foo(1)"), ParseError);
  CHECK_THROWS_AS(parse_network("species A\nA -> B @ ma(1)"), ValidationError);
  CHECK_THROWS_AS(parse_network(""), ValidationError);
}

TEST_CASE("macroscopic rates") {
  const auto net = parse_network("A -> 0 @ ma(2)");
  const double c3[] = {3.0};
  CHECK(macro_rate(net, c3)[0] == doctest::Approx(6.0).epsilon(1e-15));
  const auto sq = parse_network("2 A + B -> C @ ma(1.5)");
  const double c[] = {2.0, 0.0, 1.0};
  CHECK(macro_rate(sq, c)[0] == 0.0);
  const double c2[] = {2.0, 3.0, 1.0};
  CHECK(macro_rate(sq, c2)[0] == doctest::Approx(1.5 * 4.0 * 3.0));
  const auto cst = parse_network("0 -> A @ const(1)");
  for (double x : {0.0, 0.3, 17.0}) {
    const double cx[] = {x};
    CHECK(macro_rate(cst, cx)[0] == 1.0);
  }
  const double neg[] = {-0.1};
  CHECK_THROWS_AS(macro_rate(net, neg), ValidationError);
}

TEST_CASE("microscopic propensities use falling factorials") {
  const auto dimer = parse_network("2 A -> 0 @ ma(1)");
  const auto first = parse_network("A -> 0 @ ma(1)");
  const std::int64_t one[] = {1}, thirty[] = {30};
  CHECK(micro_propensity(dimer, 10, one)[0] == 0.0);
  CHECK(micro_propensity(first, 10, thirty)[0] == doctest::Approx(30.0).epsilon(1e-15));
  CHECK(micro_propensity(dimer, 10, thirty)[0] == doctest::Approx(87.0).epsilon(1e-15));
  const auto cst = parse_network("0 -> A @ const(2.5)");
  const std::int64_t zero[] = {0};
  CHECK(micro_propensity(cst, 40, zero)[0] == doctest::Approx(100.0));
}

TEST_CASE("stoichiometric simplex membership") {
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const double c0[] = {1.0}, c5[] = {5.0};
  CHECK(simplex_contains(bd, c0, c0));
  const auto w = simplex_witness(bd, c0, c5);
  REQUIRE(w.has_value());
  const RealVec reached = bd.apply_stoichiometry(c0, *w);
  CHECK(reached[0] == doctest::Approx(5.0).epsilon(1e-9));
  CHECK((*w)[0] >= 0.0);
  CHECK((*w)[1] >= 0.0);
  const auto decay = parse_network("A -> 0 @ ma(1)");
  const double c2[] = {2.0};
  CHECK_FALSE(simplex_contains(decay, c0, c2));
  const double half[] = {0.5};
  CHECK(simplex_contains(decay, c0, half));
}

TEST_CASE("assumption validator on mass-action birth-death") {
  const auto bd = parse_network("0 -> A @ const(1); A -> 0 @ ma(2)");
  const double c0[] = {1.0};
  const auto rep = validate_assumptions(bd, c0, 0.2, 6);
  CHECK(rep.cutoff_below.passed);
  CHECK(rep.convergence.passed);
  CHECK(rep.regularity.passed);
  CHECK(rep.monotonicity.passed);
  CHECK(rep.superhomogeneity.passed);
  CHECK(rep.psi_exponent == 1);
  CHECK(rep.all_passed());
}

TEST_CASE("constant kinetics pass monotonicity and superhomogeneity") {
  const auto net = parse_network("0 -> A @ const(2); 0 -> B @ const(0.5)");
  const double c0[] = {1.0, 1.0};
  const auto rep = validate_assumptions(net, c0, 0.2, 4);
  CHECK(rep.monotonicity.passed);
  CHECK(rep.superhomogeneity.passed);
}

TEST_CASE("decreasing custom kinetics fail monotonicity with a witness") {
  CustomKinetics k;
  k.name = "one-minus-c";
  k.macro = [](std::span<const double> c) { return std::max(0.0, 1.0 - c[0]); };
  const ReactionNetwork net({"A"}, {Reaction{{1}, {0}, {}, k}});
  const double c0[] = {0.5};
  const auto rep = validate_assumptions(net, c0, 0.2, 6);
  CHECK_FALSE(rep.monotonicity.passed);
  REQUIRE_FALSE(rep.monotonicity.witnesses.empty());
  const auto& w = rep.monotonicity.witnesses.front();
  CHECK(w.observed < w.bound);
}

TEST_CASE("kinetics firing without reactants fail the cutoff check") {
  CustomKinetics k;
  k.name = "leaky";
  k.macro = [](std::span<const double> c) { return 1.0 + c[0]; };
  const ReactionNetwork net({"A"}, {Reaction{{1}, {0}, {}, k}});
  const double c0[] = {0.2};
  const auto rep = validate_assumptions(net, c0, 0.2, 6);
  CHECK_FALSE(rep.cutoff_below.passed);
  CHECK_FALSE(rep.cutoff_below.witnesses.empty());
}

TEST_CASE("psi exponent follows the maximal order") {
  const auto net = parse_network("2 A + B -> C @ ma(1); C -> 2 A + B @ ma(1)");
  const double c0[] = {1.0, 1.0, 1.0};
  const auto rep = validate_assumptions(net, c0, 0.2, 3);
  CHECK(rep.psi_exponent == 3);
  CHECK(rep.superhomogeneity.passed);
  CHECK(rep.cutoff_below.passed);
}

}  // TEST_SUITE
