#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fluxldp/errors.hpp"
#include "fluxldp/harness.hpp"

using namespace fluxldp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fluxldp_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json base_config(const fs::path& out) {
  return json{{"network", {{"dsl", "A -> 0 @ ma(2)"}}},
              {"c0", {1.0}},
              {"V", {20, 40}},
              {"T", 1.0},
              {"steps", 1000},
              {"replicas", 50},
              {"seed", 7},
              {"out", out.string()}};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const json& j) {
  try {
    ExperimentConfig::from_json(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("config errors name the field") {
  const auto out = scratch("cfg");
  auto j = base_config(out);
  CHECK_NOTHROW(ExperimentConfig::from_json(j));

  auto bad_v = j;
  bad_v["V"] = {20, 10};
  CHECK(error_of(bad_v).rfind("config.V[1]", 0) == 0);
  auto bad_c0 = j;
  bad_c0["c0"] = {1.0, 2.0};
  CHECK(error_of(bad_c0).rfind("config.c0", 0) == 0);
  auto bad_steps = j;
  bad_steps["steps"] = 2.5;
  CHECK(error_of(bad_steps).rfind("config.steps", 0) == 0);
  auto unknown = j;
  unknown["colour"] = "red";
  CHECK(error_of(unknown).find("colour") != std::string::npos);
  auto bad_net = j;
  bad_net["network"] = {{"dsl", "A -> @"}};
  CHECK(error_of(bad_net).rfind("config.network", 0) == 0);
  auto bad_tilt = j;
  bad_tilt["tilt"] = {{"kind", "constant"}, {"values", {1.0, 2.0}}};
  CHECK(error_of(bad_tilt).rfind("config.tilt", 0) == 0);
  auto few = j;
  few["replicas"] = 1;
  CHECK(error_of(few).rfind("config.replicas", 0) == 0);

  const auto cfg = ExperimentConfig::from_json(j);
  CHECK(cfg.initial_counts(20) == CountVec{20});
  auto frac = j;
  frac["c0"] = {0.55};
  CHECK_THROWS_AS(ExperimentConfig::from_json(frac).initial_counts(10), ValidationError);
  CHECK_FALSE(cfg.to_json().contains("threads"));
}

TEST_CASE("fluid command reproduces the decay solution") {
  const auto out = scratch("fluid");
  const auto cfg = ExperimentConfig::from_json(base_config(out));
  cmd_fluid(cfg);
  std::ifstream in(out / "fluid.csv");
  const auto path = read_grid_csv(in);
  double err = 0.0;
  for (std::size_t k = 0; k <= path.steps(); ++k) err = std::max(err, std::abs(path.c[k][0] - std::exp(-2.0 * path.time(k))));
  CHECK(err < 1e-6);
  CHECK(validate_output_file(out / "fluid.csv").size() > 0);
  CHECK(validate_output_file(out / "fluid.json").size() > 0);
}

TEST_CASE("rate command on the fluid solution") {
  const auto out = scratch("rate");
  const auto cfg = ExperimentConfig::from_json(base_config(out));
  const auto summary = cmd_rate(cfg);
  const auto rate = json::parse(read_all(out / "rate.json"));
  CHECK(rate.at("J").at("value").get<double>() < 1e-8);
  CHECK(rate.at("seed") == 7);
  CHECK(rate.at("config").at("V") == json({20, 40}));
  CHECK_FALSE(summary.is_null());
}

TEST_CASE("simulate output is deterministic") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  auto ja = base_config(a), jb = base_config(b);
  jb["out"] = a.string();
  cmd_simulate(ExperimentConfig::from_json(ja));
  const auto first = read_all(a / "simulate_V20.json");
  const auto first_csv = read_all(a / "simulate_V20.csv");
  cmd_simulate(ExperimentConfig::from_json(jb));
  CHECK(read_all(a / "simulate_V20.json") == first);
  CHECK(read_all(a / "simulate_V20.csv") == first_csv);
  CHECK(first_csv.rfind("# config: ", 0) == 0);
  CHECK(validate_output_file(a / "simulate_V20.json").size() > 0);
}

TEST_CASE("validate_output_file rejects corrupted files") {
  const auto out = scratch("corrupt");
  const auto cfg = ExperimentConfig::from_json(base_config(out));
  cmd_fluid(cfg);
  auto text = read_all(out / "fluid.csv");
  const auto pos = text.rfind('\n', text.size() - 2);
  text = text.substr(0, pos + 1) + "1,nope,0\n";
  std::ofstream(out / "fluid.csv", std::ios::binary) << text;
  CHECK_THROWS_AS(validate_output_file(out / "fluid.csv"), ValidationError);
  std::ofstream(out / "broken.json") << "{\"kind\": \"rate\"";
  CHECK_THROWS_AS(validate_output_file(out / "broken.json"), ValidationError);
}

TEST_CASE("ldp slope with the zero tilt") {
  const auto out = scratch("slope0");
  auto j = base_config(out);
  j["network"] = {{"dsl", "0 -> A @ const(1); A -> 0 @ ma(2)"}};
  j["c0"] = {0.5};
  j["V"] = {20, 40};
  j["replicas"] = 200;
  j["tube_radius"] = 0.5;
  const auto rep = ldp_slope_experiment(ExperimentConfig::from_json(j));
  CHECK(std::abs(rep.j_ref) < 1e-8);
  REQUIRE(rep.entries.size() == 2);
  for (const auto& e : rep.entries) CHECK(e.estimate.p_hat > 0.5);
}

TEST_CASE("ldp slope of pure birth agrees with the exact column") {
  const auto out = scratch("slope_birth");
  auto j = base_config(out);
  j["network"] = {{"dsl", "0 -> A @ const(1)"}};
  j["c0"] = {0.0};
  j["V"] = {50, 100, 200};
  j["replicas"] = 4000;
  j["steps"] = 200;
  j["tilt"] = {{"kind", "constant"}, {"values", {std::log(2.0)}}};
  j["event"] = {{"kind", "flux"}, {"reaction", 0}, {"a", 1.9}, {"b", 2.1}};
  const auto rep = ldp_slope_experiment(ExperimentConfig::from_json(j));
  CHECK(rep.j_ref == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-9));
  REQUIRE(rep.entries.size() == 3);
  for (const auto& e : rep.entries) {
    REQUIRE(e.exact_rate.has_value());
    const double half_width = e.ci_high - e.rate;
    CHECK(std::abs(e.rate - *e.exact_rate) <= 2.0 * half_width);
  }
}

TEST_CASE("ldp slope of a birth-channel tilt approaches the tube proxy") {
  const auto out = scratch("slope_bd");
  auto j = base_config(out);
  j["network"] = {{"dsl", "0 -> A @ const(1); A -> 0 @ ma(2)"}};
  j["c0"] = {0.5};
  j["V"] = {50, 100, 200, 400};
  j["replicas"] = 2000;
  j["steps"] = 200;
  j["tube_radius"] = 0.2;
  j["tilt"] = {{"kind", "constant"}, {"values", {0.8, 0.0}}};
  const auto rep = ldp_slope_experiment(ExperimentConfig::from_json(j));
  CHECK(rep.monotone_trend);
  CHECK(rep.tube_proxy <= rep.j_ref);
  CHECK(rep.relative_gap_proxy < 0.15);
}

TEST_CASE("girsanov check") {
  const auto out = scratch("girsanov");
  auto j = base_config(out);
  j["network"] = {{"dsl", "0 -> A @ const(1); A -> 0 @ ma(2)"}};
  j["c0"] = {0.5};
  j["V"] = {20};
  j["replicas"] = 4000;
  j["species_cap"] = 99;
  j["tilt"] = {{"kind", "constant"}, {"values", {0.3, -0.2}}};
  const auto cfg = ExperimentConfig::from_json(j);
  const auto rep = girsanov_check(cfg);
  CHECK(rep.passed);
  CHECK(rep.events.size() == 5);
  CHECK(rep.truncated_mass < 1e-8);

  auto zero = j;
  zero.erase("tilt");
  CHECK(girsanov_check(ExperimentConfig::from_json(zero)).passed);

  GirsanovOptions flipped;
  const auto net = cfg.network;
  const auto tilt = cfg.tilt();
  flipped.log_ratio = [net, tilt](const JumpPath& p) { return -log_likelihood_ratio(net, p, tilt); };
  CHECK_FALSE(girsanov_check(cfg, flipped).passed);
}

TEST_CASE("validate command reads back every output") {
  const auto out = scratch("validate");
  const auto cfg = ExperimentConfig::from_json(base_config(out));
  cmd_fluid(cfg);
  cmd_simulate(cfg);
  const auto rep = cmd_validate(cfg);
  const auto files = json::parse(read_all(out / "assumptions.json")).at("files");
  CHECK(files.size() >= 4);
  for (const auto& f : files) CHECK(f.at("ok") == true);
  CHECK_FALSE(rep.is_null());
}

}  // TEST_SUITE
