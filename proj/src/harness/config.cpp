#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>
#include <type_traits>

#include "fluxldp/errors.hpp"
#include "fluxldp/harness.hpp"
#include "fluxldp/regularity.hpp"

namespace fluxldp {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ValidationError("config." + field + ": " + what);
}

template <class T>
T get_field(const json& j, const std::string& field) {
  if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
    if (!j.is_number_integer()) fail(field, "must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0) fail(field, "must be non-negative");
    }
  }
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(field, "has the wrong type");
  }
}

double positive_double(const json& j, const std::string& field) {
  const auto x = get_field<double>(j, field);
  if (!(x > 0.0) || !std::isfinite(x)) fail(field, "must be a positive finite number");
  return x;
}

RealVec double_array(const json& j, const std::string& field, std::size_t expected) {
  if (!j.is_array()) fail(field, "must be an array");
  if (j.size() != expected) fail(field, "must have " + std::to_string(expected) + " entries");
  RealVec out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto x = get_field<double>(j[i], field + "[" + std::to_string(i) + "]");
    if (!std::isfinite(x)) fail(field + "[" + std::to_string(i) + "]", "must be finite");
    out.push_back(x);
  }
  return out;
}

TiltProtocol apply_cutoff(const TiltProtocol& tilt, double delta) {
  const double T = tilt.horizon();
  if (!(delta > 0.0) || !(4.0 * delta < T)) fail("tilt.cutoff", "must satisfy 0 < cutoff < T/4");
  std::vector<RealVec> nodes = tilt.nodes();
  const std::size_t K = tilt.steps();
  const double h = T / static_cast<double>(K);
  const double guard = 1e-12 * T;
  for (std::size_t k = 0; k <= K; ++k) {
    const double t = tilt.node_time(k);
    const double eta = (t - h < delta - guard || T - t - h < delta - guard) ? 0.0 : cutoff_ramp(t, T, delta);
    for (double& z : nodes[k]) z *= eta;
  }
  TiltProtocol out(T, std::move(nodes));
  out.set_support_margin(delta);
  return out;
}

}  // namespace

TiltProtocol tilt_from_spec(const json& spec, const ReactionNetwork& net, double horizon, std::size_t steps) {
  const std::size_t nr = net.num_reactions(), ny = net.num_species();
  if (spec.is_null()) return TiltProtocol::zero(nr, horizon);
  if (!spec.is_object()) fail("tilt", "must be an object");
  if (!spec.contains("kind")) fail("tilt.kind", "is required");
  const auto kind = get_field<std::string>(spec.at("kind"), "tilt.kind");
  for (const auto& item : spec.items()) {
    static const std::set<std::string> known{"kind", "values", "xi", "zeta", "cutoff"};
    if (!known.count(item.key())) fail("tilt." + item.key(), "unknown field");
  }
  auto require = [&](const char* key) -> const json& {
    if (!spec.contains(key)) fail(std::string("tilt.") + key, "is required for kind '" + kind + "'");
    return spec.at(key);
  };
  TiltProtocol tilt = TiltProtocol::zero(nr, horizon);
  if (kind == "zero") {
  } else if (kind == "constant") {
    tilt = TiltProtocol::constant(double_array(require("values"), "tilt.values", nr), horizon);
  } else if (kind == "species") {
    const RealVec xi = double_array(require("xi"), "tilt.xi", ny);
    tilt = TiltProtocol::from_species_potential(net, horizon, {xi, xi});
  } else if (kind == "grid") {
    const json& z = require("zeta");
    if (!z.is_array() || z.size() < 2) fail("tilt.zeta", "must be an array of at least two node vectors");
    std::vector<RealVec> nodes;
    for (std::size_t k = 0; k < z.size(); ++k) {
      nodes.push_back(double_array(z[k], "tilt.zeta[" + std::to_string(k) + "]", nr));
    }
    tilt = TiltProtocol(horizon, std::move(nodes));
  } else {
    fail("tilt.kind", "unknown kind '" + kind + "'");
  }
  if (spec.contains("cutoff")) {
    const double delta = positive_double(spec.at("cutoff"), "tilt.cutoff");
    if (tilt.steps() < steps) {
      std::vector<RealVec> nodes;
      for (std::size_t k = 0; k <= steps; ++k) {
        nodes.push_back(tilt.values(horizon * static_cast<double>(k) / static_cast<double>(steps)));
      }
      tilt = TiltProtocol(horizon, std::move(nodes));
    }
    tilt = apply_cutoff(tilt, delta);
  }
  return tilt;
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("config: must be a JSON object");
  static const std::set<std::string> known{"network", "c0", "V", "T", "steps", "replicas", "seed", "tilt",
                                           "event", "out", "tolerances", "tube_radius", "tilt_cap", "eps",
                                           "grid", "input", "species_cap"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) fail(item.key(), "unknown field");
  }
  ExperimentConfig cfg;
  if (!j.contains("network")) fail("network", "is required");
  const json& net = j.at("network");
  try {
    if (net.is_string()) {
      std::filesystem::path p = net.get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      if (!std::filesystem::exists(p)) fail("network", "file '" + p.string() + "' does not exist");
      cfg.network_source = p.string();
      cfg.network = load_network_file(p.string());
    } else if (net.is_object() && net.contains("dsl")) {
      cfg.network_source = "inline";
      cfg.network = parse_network(get_field<std::string>(net.at("dsl"), "network.dsl"));
    } else if (net.is_object()) {
      cfg.network_source = "inline";
      cfg.network = network_from_json(net);
    } else {
      fail("network", "must be a file path or an object");
    }
  } catch (const ValidationError& e) {
    if (std::string_view(e.what()).starts_with("config.")) throw;
    fail("network", e.what());
  }
  const std::size_t ny = cfg.network.num_species();

  if (!j.contains("c0")) fail("c0", "is required");
  cfg.c0 = double_array(j.at("c0"), "c0", ny);
  for (std::size_t y = 0; y < ny; ++y) {
    if (cfg.c0[y] < 0.0) fail("c0[" + std::to_string(y) + "]", "must be non-negative");
  }

  if (!j.contains("V")) fail("V", "is required");
  const json& vs = j.at("V");
  if (vs.is_number_integer()) {
    cfg.volumes.push_back(vs.get<std::int64_t>());
  } else if (vs.is_array()) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (!vs[i].is_number_integer()) fail("V[" + std::to_string(i) + "]", "must be an integer");
      cfg.volumes.push_back(vs[i].get<std::int64_t>());
    }
  } else {
    fail("V", "must be an integer or an array of integers");
  }
  if (cfg.volumes.empty()) fail("V", "must be nonempty");
  for (std::size_t i = 0; i < cfg.volumes.size(); ++i) {
    if (cfg.volumes[i] <= 0) fail("V[" + std::to_string(i) + "]", "must be positive");
    if (i > 0 && cfg.volumes[i] <= cfg.volumes[i - 1]) fail("V[" + std::to_string(i) + "]", "V must be increasing");
  }

  if (j.contains("T")) cfg.horizon = positive_double(j.at("T"), "T");
  if (j.contains("steps")) {
    cfg.steps = get_field<std::size_t>(j.at("steps"), "steps");
    if (cfg.steps < 1) fail("steps", "must be at least 1");
  }
  if (j.contains("replicas")) {
    cfg.replicas = get_field<std::size_t>(j.at("replicas"), "replicas");
    if (cfg.replicas < 2) fail("replicas", "must be at least 2");
  }
  if (j.contains("seed")) cfg.seed = get_field<std::uint64_t>(j.at("seed"), "seed");
  if (j.contains("tilt")) {
    cfg.tilt_spec = j.at("tilt");
    tilt_from_spec(cfg.tilt_spec, cfg.network, cfg.horizon, cfg.steps);
  }
  if (j.contains("event")) {
    cfg.event_spec = j.at("event");
    if (!cfg.event_spec.is_object() || !cfg.event_spec.contains("kind")) fail("event.kind", "is required");
  }
  if (j.contains("out")) {
    std::filesystem::path p = get_field<std::string>(j.at("out"), "out");
    cfg.out = p.is_relative() ? base_dir / p : p;
  } else {
    cfg.out = base_dir / "out";
  }
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    if (!t.is_object()) fail("tolerances", "must be an object");
    for (const auto& item : t.items()) {
      const std::string field = "tolerances." + item.key();
      const double x = positive_double(item.value(), field);
      if (item.key() == "continuity") cfg.tolerances.continuity = x;
      else if (item.key() == "simplex") cfg.tolerances.simplex = x;
      else if (item.key() == "oracle_rel") cfg.tolerances.oracle_rel = x;
      else if (item.key() == "truncation") cfg.tolerances.truncation = x;
      else fail(field, "unknown field");
    }
  }
  if (j.contains("tube_radius")) cfg.tube_radius = positive_double(j.at("tube_radius"), "tube_radius");
  if (j.contains("tilt_cap")) cfg.tilt_cap = positive_double(j.at("tilt_cap"), "tilt_cap");
  if (j.contains("eps")) cfg.eps = positive_double(j.at("eps"), "eps");
  if (j.contains("grid")) {
    cfg.grid = get_field<int>(j.at("grid"), "grid");
    if (cfg.grid < 2) fail("grid", "must be at least 2");
  }
  if (j.contains("input")) {
    std::filesystem::path p = get_field<std::string>(j.at("input"), "input");
    if (p.is_relative()) p = base_dir / p;
    cfg.input = p.string();
  }
  if (j.contains("species_cap")) {
    cfg.species_cap = get_field<std::int64_t>(j.at("species_cap"), "species_cap");
    if (cfg.species_cap < 0) fail("species_cap", "must be non-negative");
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("config: cannot open '" + file.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config: invalid JSON in '" + file.string() + "': " + e.what());
  }
  return from_json(j, file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path());
}

json ExperimentConfig::to_json() const {
  json j;
  j["network_source"] = network_source;
  if (network.is_serializable()) j["network"] = network_to_json(network);
  j["c0"] = c0;
  j["V"] = volumes;
  j["T"] = horizon;
  j["steps"] = steps;
  j["replicas"] = replicas;
  j["seed"] = seed;
  j["tilt"] = tilt_spec;
  j["event"] = event_spec;
  j["out"] = out.string();
  j["tolerances"] = {{"continuity", tolerances.continuity},
                     {"simplex", tolerances.simplex},
                     {"oracle_rel", tolerances.oracle_rel},
                     {"truncation", tolerances.truncation}};
  j["tube_radius"] = tube_radius;
  j["tilt_cap"] = tilt_cap;
  j["eps"] = eps;
  j["grid"] = grid;
  j["input"] = input;
  j["species_cap"] = species_cap;
  return j;
}

TiltProtocol ExperimentConfig::tilt() const { return tilt_from_spec(tilt_spec, network, horizon, steps); }

CountVec ExperimentConfig::initial_counts(std::int64_t volume) const {
  CountVec n(c0.size());
  for (std::size_t y = 0; y < c0.size(); ++y) {
    const double x = c0[y] * static_cast<double>(volume);
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) {
      std::ostringstream os;
      os << "V*c0 = " << x << " is not an integer at V = " << volume;
      fail("c0[" + std::to_string(y) + "]", os.str());
    }
    n[y] = static_cast<std::int64_t>(r);
  }
  return n;
}

}  // namespace fluxldp
