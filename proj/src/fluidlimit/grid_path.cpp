#include "fluxldp/grid_path.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "fluxldp/errors.hpp"

namespace fluxldp {

GridPath::GridPath(double T, std::vector<RealVec> c_nodes, std::vector<RealVec> w_nodes)
    : horizon(T), c(std::move(c_nodes)), w(std::move(w_nodes)) {
  validate_shape();
}

void GridPath::validate_shape() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("grid path: horizon must be positive");
  if (c.size() < 2 || c.size() != w.size()) throw ValidationError("grid path: need matching c and w with >= 2 nodes");
  const std::size_t ny = c.front().size(), nr = w.front().size();
  if (ny == 0 || nr == 0) throw ValidationError("grid path: empty state");
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k].size() != ny || w[k].size() != nr) throw ValidationError("grid path: ragged node arrays");
  }
}

RealVec GridPath::forward_rate(std::size_t k) const {
  RealVec out(num_reactions());
  const double h = dt();
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = (w[k + 1][r] - w[k][r]) / h;
  return out;
}

namespace {

RealVec centered(const std::vector<RealVec>& x, std::size_t k, double h) {
  const std::size_t K = x.size() - 1;
  RealVec out(x[k].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (k == 0) {
      out[i] = (x[1][i] - x[0][i]) / h;
    } else if (k == K) {
      out[i] = (x[K][i] - x[K - 1][i]) / h;
    } else {
      out[i] = (x[k + 1][i] - x[k - 1][i]) / (2.0 * h);
    }
  }
  return out;
}

std::string num(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, std::size_t line) {
  const std::string t = trim(s);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ParseError(line, 1, "bad number '" + t + "'");
  }
  return v;
}

}  // namespace

RealVec GridPath::centered_rate(std::size_t k) const { return centered(w, k, dt()); }

RealVec GridPath::centered_concentration_rate(std::size_t k) const { return centered(c, k, dt()); }

double GridPath::continuity_residual(const ReactionNetwork& net) const {
  if (net.num_species() != num_species() || net.num_reactions() != num_reactions()) {
    throw ValidationError("grid path: dimensions do not match the network");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < num_nodes(); ++k) {
    const RealVec pred = net.apply_stoichiometry(c.front(), w[k]);
    for (std::size_t y = 0; y < pred.size(); ++y) worst = std::max(worst, std::abs(c[k][y] - pred[y]));
  }
  return worst;
}

RealVec interpolate(const std::vector<RealVec>& nodes, double horizon, double t) {
  const std::size_t K = nodes.size() - 1;
  if (t <= 0.0) return nodes.front();
  if (t >= horizon) return nodes.back();
  const double pos = t / horizon * static_cast<double>(K);
  const std::size_t k = std::min(static_cast<std::size_t>(pos), K - 1);
  const double f = pos - static_cast<double>(k);
  RealVec out(nodes[k].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = nodes[k][i] + f * (nodes[k + 1][i] - nodes[k][i]);
  return out;
}

void write_grid_csv(std::ostream& os, const ReactionNetwork& net, const GridPath& path,
                    const std::vector<std::string>& comments) {
  for (const auto& line : comments) os << "# " << line << '\n';
  for (const auto& wmsg : path.warnings) os << "# warning: " << wmsg << '\n';
  os << "# columns: t, concentrations c:<species>, cumulative fluxes w:<reaction index>\n";
  os << 't';
  for (const auto& s : net.species()) os << ",c:" << s;
  for (std::size_t r = 0; r < net.num_reactions(); ++r) os << ",w:" << r;
  os << '\n';
  for (std::size_t k = 0; k < path.num_nodes(); ++k) {
    os << num(path.time(k));
    for (double x : path.c[k]) os << ',' << num(x);
    for (double x : path.w[k]) os << ',' << num(x);
    os << '\n';
  }
}

GridPath read_grid_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t ny = 0, nr = 0;
  bool have_header = false;
  std::vector<double> times;
  std::vector<RealVec> c, w;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto cells = split(t, ',');
    if (!have_header) {
      if (cells.empty() || trim(cells[0]) != "t") throw ParseError(lineno, 1, "expected header starting with 't'");
      for (std::size_t i = 1; i < cells.size(); ++i) {
        const std::string h = trim(cells[i]);
        if (h.rfind("c:", 0) == 0) {
          if (nr > 0) throw ParseError(lineno, 1, "c: columns must precede w: columns");
          ++ny;
        } else if (h.rfind("w:", 0) == 0) {
          ++nr;
        } else {
          throw ParseError(lineno, 1, "unknown column '" + h + "'");
        }
      }
      have_header = true;
      continue;
    }
    if (cells.size() != 1 + ny + nr) throw ParseError(lineno, 1, "wrong number of columns");
    times.push_back(parse_double(cells[0], lineno));
    RealVec cr(ny), wr(nr);
    for (std::size_t y = 0; y < ny; ++y) cr[y] = parse_double(cells[1 + y], lineno);
    for (std::size_t r = 0; r < nr; ++r) wr[r] = parse_double(cells[1 + ny + r], lineno);
    c.push_back(std::move(cr));
    w.push_back(std::move(wr));
  }
  if (!have_header || times.size() < 2) throw ValidationError("grid csv: need a header and at least two rows");
  const double T = times.back();
  const std::size_t K = times.size() - 1;
  for (std::size_t k = 0; k <= K; ++k) {
    const double expect = T * static_cast<double>(k) / static_cast<double>(K);
    if (std::abs(times[k] - expect) > 1e-9 * (1.0 + T)) throw ValidationError("grid csv: time grid is not uniform");
  }
  return GridPath(T, std::move(c), std::move(w));
}

nlohmann::json grid_to_json(const GridPath& path) {
  return {{"T", path.horizon},
          {"c", path.c},
          {"w", path.w},
          {"total_variation", path.total_variation},
          {"warnings", path.warnings}};
}

GridPath grid_from_json(const nlohmann::json& j) {
  try {
    GridPath p(j.at("T").get<double>(), j.at("c").get<std::vector<RealVec>>(), j.at("w").get<std::vector<RealVec>>());
    p.total_variation = j.value("total_variation", 0.0);
    p.warnings = j.value("warnings", std::vector<std::string>{});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("grid path json: ") + e.what());
  }
}

double grid_sup_distance(const GridPath& a, const GridPath& b) {
  if (a.num_nodes() != b.num_nodes() || a.num_species() != b.num_species() ||
      a.num_reactions() != b.num_reactions()) {
    throw ValidationError("grid paths have different shapes");
  }
  double d = 0.0;
  for (std::size_t k = 0; k < a.num_nodes(); ++k) {
    for (std::size_t y = 0; y < a.num_species(); ++y) d = std::max(d, std::abs(a.c[k][y] - b.c[k][y]));
    for (std::size_t r = 0; r < a.num_reactions(); ++r) d = std::max(d, std::abs(a.w[k][r] - b.w[k][r]));
  }
  return d;
}

}  // namespace fluxldp
