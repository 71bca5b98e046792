#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fluxldp/assumptions.hpp"
#include "fluxldp/errors.hpp"
#include "fluxldp/fluid.hpp"
#include "fluxldp/harness.hpp"
#include "fluxldp/parallel.hpp"
#include "fluxldp/rate.hpp"

namespace fluxldp {

namespace {

using nlohmann::json;

std::filesystem::path prepare(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  return cfg.out / name;
}

void write_json(const std::filesystem::path& file, const json& j) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ValidationError("cannot write '" + file.string() + "'");
  os << j.dump(2) << '\n';
}

json envelope(const ExperimentConfig& cfg, const std::string& kind) {
  return json{{"kind", kind}, {"seed", cfg.seed}, {"config", cfg.to_json()}};
}

std::vector<std::string> provenance_lines(const ExperimentConfig& cfg) {
  return {"config: " + cfg.to_json().dump(), "seed: " + std::to_string(cfg.seed)};
}

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void write_table(const std::filesystem::path& file, const ExperimentConfig& cfg,
                 const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ValidationError("cannot write '" + file.string() + "'");
  for (const auto& line : provenance_lines(cfg)) os << "# " << line << '\n';
  os << "# columns:";
  for (std::size_t i = 0; i < columns.size(); ++i) os << ' ' << i + 1 << '=' << columns[i];
  os << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << number(row[i]);
    os << '\n';
  }
}

void write_grid(const std::filesystem::path& file, const ExperimentConfig& cfg, const GridPath& path) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ValidationError("cannot write '" + file.string() + "'");
  write_grid_csv(os, cfg.network, path, provenance_lines(cfg));
}

json nullable(double x) { return std::isfinite(x) ? json(x) : json("inf"); }

GridPath read_grid_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("config.input: cannot open '" + file + "'");
  if (file.size() >= 5 && file.substr(file.size() - 5) == ".json") {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ValidationError("config.input: " + std::string(e.what()));
    }
    return grid_from_json(j.contains("path") ? j.at("path") : j);
  }
  return read_grid_csv(in);
}

ReactionNetwork embedded_network(const json& j, const std::string& file) {
  if (!j.contains("config") || !j.at("config").contains("network")) {
    throw ValidationError(file + ": missing embedded config");
  }
  return network_from_json(j.at("config").at("network"));
}

}  // namespace

json cmd_simulate(const ExperimentConfig& cfg) {
  json summary = envelope(cfg, "simulate");
  summary["files"] = json::array();
  for (const auto v : cfg.volumes) {
    const CountVec n0 = cfg.initial_counts(v);
    const TiltProtocol tilt = cfg.tilt();
    std::vector<JumpPath> paths(cfg.replicas);
    parallel_for(cfg.replicas, cfg.threads, [&](std::size_t i) {
      SimulateOptions opt;
      opt.stream = i;
      paths[i] = simulate(cfg.network, v, n0, cfg.horizon, cfg.seed, tilt.is_zero() ? nullptr : &tilt, opt);
    });
    json doc = envelope(cfg, "simulate");
    doc["volume"] = v;
    doc["paths"] = json::array();
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      doc["paths"].push_back(path_to_json(paths[i]));
      const CountState end = count_state(cfg.network, paths[i], cfg.horizon);
      std::vector<double> row{static_cast<double>(i), static_cast<double>(paths[i].events.size())};
      for (auto n : end.n) row.push_back(static_cast<double>(n) / static_cast<double>(v));
      for (auto m : end.fired) row.push_back(static_cast<double>(m) / static_cast<double>(v));
      rows.push_back(std::move(row));
    }
    const std::string stem = "simulate_V" + std::to_string(v);
    write_json(prepare(cfg, stem + ".json"), doc);
    std::vector<std::string> columns{"replica", "events"};
    for (const auto& s : cfg.network.species()) columns.push_back("c:" + s + "(T)");
    for (std::size_t r = 0; r < cfg.network.num_reactions(); ++r) columns.push_back("w:" + std::to_string(r) + "(T)");
    write_table(prepare(cfg, stem + ".csv"), cfg, columns, rows);
    summary["files"].push_back(stem + ".json");
    summary["files"].push_back(stem + ".csv");
  }
  return summary;
}

json cmd_fluid(const ExperimentConfig& cfg) {
  const GridPath path = solve_perturbed(cfg.network, cfg.c0, cfg.tilt(), cfg.horizon, cfg.steps);
  write_grid(prepare(cfg, "fluid.csv"), cfg, path);
  json doc = envelope(cfg, "fluid");
  doc["path"] = grid_to_json(path);
  write_json(prepare(cfg, "fluid.json"), doc);
  json summary = envelope(cfg, "fluid");
  summary["files"] = {"fluid.csv", "fluid.json"};
  summary["warnings"] = path.warnings;
  return summary;
}

json cmd_rate(const ExperimentConfig& cfg) {
  const GridPath path = cfg.input.empty() ? solve_perturbed(cfg.network, cfg.c0, cfg.tilt(), cfg.horizon, cfg.steps)
                                          : read_grid_file(cfg.input);
  path.validate_shape();
  if (path.num_species() != cfg.network.num_species() || path.num_reactions() != cfg.network.num_reactions()) {
    throw ValidationError("config.input: path dimensions do not match the network");
  }
  json doc = envelope(cfg, "rate");
  doc["source"] = cfg.input.empty() ? "fluid" : cfg.input;
  const RateReport J = evaluate_J(cfg.network, path, cfg.tolerances.continuity);
  doc["J"] = J.to_json();
  if (J.finite()) {
    const TiltProtocol best = optimal_tilt(cfg.network, path, cfg.tilt_cap);
    doc["G_optimal"] = evaluate_G(cfg.network, path, best);
  } else {
    doc["G_optimal"] = nullptr;
  }
  doc["G_config"] =
      cfg.tilt_spec.is_null() ? json(nullptr) : json(evaluate_G(cfg.network, path, cfg.tilt()));
  const ContractionResult I = contraction_I(cfg.network, path);
  doc["I"] = I.to_json();
  write_json(prepare(cfg, "rate.json"), doc);
  json summary = envelope(cfg, "rate");
  summary["files"] = {"rate.json"};
  summary["J"] = nullable(J.value);
  summary["I"] = nullable(I.value);
  return summary;
}

json cmd_tilt(const ExperimentConfig& cfg) {
  if (cfg.event_spec.is_null()) throw ValidationError("config.event: required for the tilt command");
  const TiltProtocol tilt = cfg.tilt();
  const GridPath center = solve_perturbed(cfg.network, cfg.c0, tilt, cfg.horizon, cfg.steps);
  const EventPredicate event = EventPredicate::from_json(cfg.event_spec, cfg.network, &center, &tilt);
  json doc = envelope(cfg, "tilt");
  doc["event"] = event.description();
  doc["estimates"] = json::array();
  std::vector<std::vector<double>> rows;
  ImportanceOptions opt;
  opt.threads = cfg.threads;
  for (const auto v : cfg.volumes) {
    const EstimateReport rep =
        importance_estimate(cfg.network, v, cfg.initial_counts(v), cfg.horizon, event, tilt, cfg.replicas, cfg.seed, opt);
    json e = rep.to_json();
    e["volume"] = v;
    doc["estimates"].push_back(e);
    rows.push_back({static_cast<double>(v), rep.p_hat, rep.std_error, rep.log_p_hat,
                    -rep.log_p_hat / static_cast<double>(v), rep.ess, static_cast<double>(rep.hits)});
  }
  write_json(prepare(cfg, "tilt.json"), doc);
  write_table(prepare(cfg, "tilt.csv"), cfg, {"V", "p_hat", "stderr", "log_p_hat", "rate", "ess", "hits"}, rows);
  json summary = envelope(cfg, "tilt");
  summary["files"] = {"tilt.json", "tilt.csv"};
  return summary;
}

json cmd_lln(const ExperimentConfig& cfg) {
  const TiltProtocol tilt = cfg.tilt();
  LlnOptions opt;
  opt.steps = cfg.steps;
  opt.threads = cfg.threads;
  opt.tilt = tilt.is_zero() ? nullptr : &tilt;
  json doc = envelope(cfg, "lln");
  doc["stats"] = json::array();
  std::vector<std::vector<double>> rows;
  std::vector<double> vs, medians;
  for (const auto v : cfg.volumes) {
    const LlnStats s = lln_gap(cfg.network, v, cfg.c0, cfg.horizon, cfg.replicas, cfg.seed, opt);
    doc["stats"].push_back(s.to_json());
    rows.push_back({static_cast<double>(v), s.mean, s.median, s.q90, s.q99, s.max});
    vs.push_back(static_cast<double>(v));
    medians.push_back(s.median);
  }
  const bool fit = vs.size() >= 2 && std::all_of(medians.begin(), medians.end(), [](double m) { return m > 0.0; });
  doc["median_loglog_slope"] = fit ? json(loglog_slope(vs, medians)) : json(nullptr);
  write_json(prepare(cfg, "lln.json"), doc);
  write_table(prepare(cfg, "lln.csv"), cfg, {"V", "mean", "median", "q90", "q99", "max"}, rows);
  json summary = envelope(cfg, "lln");
  summary["files"] = {"lln.json", "lln.csv"};
  summary["median_loglog_slope"] = doc["median_loglog_slope"];
  return summary;
}

json cmd_ldp_slope(const ExperimentConfig& cfg) {
  const SlopeReport rep = ldp_slope_experiment(cfg);
  json doc = envelope(cfg, "ldp_slope");
  doc["report"] = rep.to_json();
  write_json(prepare(cfg, "ldp_slope.json"), doc);
  std::vector<std::vector<double>> rows;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : rep.entries) {
    rows.push_back({static_cast<double>(e.volume), e.rate, e.ci_low, e.ci_high, e.estimate.p_hat,
                    e.estimate.std_error, e.estimate.ess, e.exact_rate.value_or(nan), rep.j_ref});
  }
  write_table(prepare(cfg, "ldp_slope.csv"), cfg,
              {"V", "rate", "ci_low", "ci_high", "p_hat", "stderr", "ess", "exact_rate", "J_ref"}, rows);
  json summary = envelope(cfg, "ldp_slope");
  summary["files"] = {"ldp_slope.json", "ldp_slope.csv"};
  summary["J_ref"] = rep.j_ref;
  summary["asymptote"] = rep.asymptote;
  summary["relative_gap"] = rep.relative_gap;
  return summary;
}

json cmd_girsanov(const ExperimentConfig& cfg) {
  const GirsanovReport rep = girsanov_check(cfg);
  json doc = envelope(cfg, "girsanov");
  doc["report"] = rep.to_json();
  write_json(prepare(cfg, "girsanov.json"), doc);
  json summary = envelope(cfg, "girsanov");
  summary["files"] = {"girsanov.json"};
  summary["passed"] = rep.passed;
  return summary;
}

json cmd_validate(const ExperimentConfig& cfg) {
  const AssumptionReport rep = validate_assumptions(cfg.network, cfg.c0, cfg.eps, cfg.grid);
  json doc = envelope(cfg, "assumptions");
  doc["report"] = rep.to_json();
  json files = json::array();
  if (std::filesystem::is_directory(cfg.out)) {
    std::vector<std::filesystem::path> list;
    for (const auto& entry : std::filesystem::directory_iterator(cfg.out)) {
      if (!entry.is_regular_file()) continue;
      const auto name = entry.path().filename().string();
      if (name == "meta.json" || name == "assumptions.json") continue;
      list.push_back(entry.path());
    }
    std::sort(list.begin(), list.end());
    for (const auto& f : list) {
      json item{{"file", f.filename().string()}};
      try {
        item["ok"] = true;
        item["detail"] = validate_output_file(f);
      } catch (const Error& e) {
        item["ok"] = false;
        item["detail"] = e.what();
      }
      files.push_back(item);
    }
  }
  doc["files"] = files;
  write_json(prepare(cfg, "assumptions.json"), doc);
  json summary = envelope(cfg, "validate");
  summary["files"] = files;
  summary["assumptions_passed"] = rep.all_passed();
  bool ok = true;
  for (const auto& f : files) ok = ok && f.at("ok").get<bool>();
  summary["files_ok"] = ok;
  return summary;
}

std::string validate_output_file(const std::filesystem::path& file) {
  const std::string name = file.filename().string();
  const std::string ext = file.extension().string();
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError(name + ": cannot open");
  if (ext == ".flxj") {
    const JumpPath p = read_path_binary(in);
    return "jump path with " + std::to_string(p.events.size()) + " events";
  }
  if (ext == ".csv") {
    std::string line, header;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    std::size_t i = 0;
    while (i < lines.size() && !lines[i].empty() && lines[i][0] == '#') ++i;
    if (i == lines.size()) throw ValidationError(name + ": no header row");
    header = lines[i];
    if (header.rfind("t,", 0) == 0) {
      std::ifstream again(file);
      const GridPath g = read_grid_csv(again);
      g.validate_shape();
      return "grid path with " + std::to_string(g.steps()) + " cells";
    }
    const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    std::size_t rows = 0;
    for (++i; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      std::stringstream ss(lines[i]);
      std::string cell;
      std::size_t n = 0;
      while (std::getline(ss, cell, ',')) {
        ++n;
        if (cell == "nan" || cell == "inf" || cell == "-inf") continue;
        std::size_t used = 0;
        try {
          std::stod(cell, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != cell.size() || cell.empty()) throw ValidationError(name + ": non-numeric cell '" + cell + "'");
      }
      if (n != columns) throw ValidationError(name + ": row " + std::to_string(rows + 1) + " has the wrong width");
      ++rows;
    }
    return "table with " + std::to_string(rows) + " rows";
  }
  if (ext != ".json") throw ValidationError(name + ": unknown file type");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(name + ": " + e.what());
  }
  const std::string kind = j.value("kind", "");
  if (kind == "simulate") {
    const ReactionNetwork net = embedded_network(j, name);
    for (const auto& p : j.at("paths")) validate_path(net, path_from_json(p));
    return std::to_string(j.at("paths").size()) + " jump paths";
  }
  if (kind == "fluid") {
    const ReactionNetwork net = embedded_network(j, name);
    const GridPath g = grid_from_json(j.at("path"));
    g.validate_shape();
    const double tol = j.at("config").at("tolerances").at("continuity").get<double>();
    if (g.continuity_residual(net) > tol) throw ValidationError(name + ": continuity residual above tolerance");
    return "fluid path with " + std::to_string(g.steps()) + " cells";
  }
  if (kind == "rate") {
    const auto& J = j.at("J").at("value");
    if (J.is_number() && J.get<double>() < -1e-12) throw ValidationError(name + ": negative J");
    return "rate report";
  }
  if (kind == "tilt") {
    for (const auto& e : j.at("estimates")) {
      if (e.at("p_hat").get<double>() < 0.0 || e.at("stderr").get<double>() < 0.0) {
        throw ValidationError(name + ": negative estimate");
      }
    }
    return std::to_string(j.at("estimates").size()) + " estimates";
  }
  if (kind == "lln") {
    for (const auto& s : j.at("stats")) {
      const double med = s.at("median").get<double>(), q90 = s.at("q90").get<double>();
      const double q99 = s.at("q99").get<double>(), mx = s.at("max").get<double>();
      if (!(0.0 <= med && med <= q90 && q90 <= q99 && q99 <= mx)) throw ValidationError(name + ": quantiles out of order");
    }
    return std::to_string(j.at("stats").size()) + " LLN summaries";
  }
  if (kind == "ldp_slope") {
    for (const auto& e : j.at("report").at("entries")) {
      if (!e.at("ci_low").is_number() || !e.at("ci_high").is_number()) {
        throw ValidationError(name + ": non-finite confidence interval at V = " + e.at("volume").dump());
      }
    }
    return std::to_string(j.at("report").at("entries").size()) + " slope entries";
  }
  if (kind == "girsanov") return std::string("girsanov report, passed = ") + (j.at("report").at("passed").get<bool>() ? "true" : "false");
  throw ValidationError(name + ": unknown report kind '" + kind + "'");
}

void write_metadata(const std::filesystem::path& out, const std::vector<std::string>& argv) {
  std::filesystem::create_directories(out);
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream when;
  when << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  write_json(out / "meta.json", json{{"timestamp", when.str()}, {"argv", argv}});
}

}  // namespace fluxldp
