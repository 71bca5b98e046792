#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "fluxldp/errors.hpp"
#include "fluxldp/harness.hpp"

namespace {

using Command = nlohmann::json (*)(const fluxldp::ExperimentConfig&);

const std::map<std::string, std::pair<Command, std::string>>& commands() {
  static const std::map<std::string, std::pair<Command, std::string>> table{
      {"simulate", {fluxldp::cmd_simulate, "Simulate jump paths for every volume"}},
      {"fluid", {fluxldp::cmd_fluid, "Solve the (perturbed) reaction rate equation"}},
      {"rate", {fluxldp::cmd_rate, "Evaluate J, G and the contraction on a grid path"}},
      {"tilt", {fluxldp::cmd_tilt, "Importance-sampling estimates of an event"}},
      {"lln", {fluxldp::cmd_lln, "Sup-norm gap between jump paths and the fluid limit"}},
      {"ldp-slope", {fluxldp::cmd_ldp_slope, "Estimate -(1/V) log p(V) against J of the tube center"}},
      {"girsanov-check", {fluxldp::cmd_girsanov, "Check tilted estimates against the exact transient law"}},
      {"validate", {fluxldp::cmd_validate, "Check rate assumptions and re-read emitted files"}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flux large-deviation toolkit for chemical reaction networks"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  int threads = 0;
  app.add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out, "Override the output directory");
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.fallthrough();
  for (const auto& [name, entry] : commands()) app.add_subcommand(name, entry.second);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    fluxldp::ExperimentConfig cfg = fluxldp::ExperimentConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    if (out) cfg.out = *out;
    cfg.threads = threads;
    const std::string name = app.get_subcommands().front()->get_name();
    const nlohmann::json summary = commands().at(name).first(cfg);
    fluxldp::write_metadata(cfg.out, std::vector<std::string>(argv, argv + argc));
    std::cout << summary.dump(2) << '\n';
    if (name == "girsanov-check" && !summary.at("passed").get<bool>()) std::cerr << "girsanov check FAILED\n";
    return 0;
  } catch (const fluxldp::OracleError& e) {
    std::cerr << "oracle infeasible: " << e.what() << '\n';
    return 3;
  } catch (const fluxldp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const fluxldp::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
