#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "fluxldp/errors.hpp"
#include "fluxldp/jump_path.hpp"
#include "fluxldp/parallel.hpp"
#include "fluxldp/rng.hpp"

namespace fluxldp {

namespace {

void check_inputs(const ReactionNetwork& net, std::int64_t volume, std::span<const std::int64_t> n0, double horizon) {
  if (volume <= 0) throw ValidationError("simulate: volume must be positive");
  if (n0.size() != net.num_species()) throw ValidationError("simulate: initial counts have wrong length");
  for (auto n : n0) {
    if (n < 0) throw ValidationError("simulate: initial counts must be non-negative");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("simulate: horizon must be positive");
}

double refresh_propensities(const ReactionNetwork& net, std::int64_t volume, const CountVec& n, RealVec& a) {
  double total = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    a[r] = micro_propensity(net.reaction(r), volume, n);
    if (!std::isfinite(a[r]) || a[r] < 0.0) {
      throw NumericalError("simulate: propensity of reaction " + std::to_string(r) + " is not finite");
    }
    total += a[r];
  }
  if (!std::isfinite(total)) throw NumericalError("simulate: total propensity overflow");
  return total;
}

void fire(const ReactionNetwork& net, CountVec& n, std::size_t r) {
  const auto& g = net.reaction(r).gamma;
  for (std::size_t y = 0; y < n.size(); ++y) {
    n[y] += g[y];
    if (n[y] < 0) {
      throw NumericalError("simulate: reaction " + std::to_string(r) + " drove species " + net.species()[y] +
                           " negative; kinetics violate the cutoff condition");
    }
  }
}

// Index r with cumulative weight first exceeding u·total.
std::size_t select(const RealVec& weights, double total, double u) {
  const double target = u * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    if (weights[r] <= 0.0) continue;
    acc += weights[r];
    last = r;
    if (target < acc) return r;
  }
  return last;
}

}  // namespace

JumpPath simulate(const ReactionNetwork& net, std::int64_t volume, std::span<const std::int64_t> n0, double horizon,
                  std::uint64_t seed, const TiltProtocol* tilt, const SimulateOptions& options) {
  check_inputs(net, volume, n0, horizon);
  if (tilt && tilt->num_reactions() != net.num_reactions()) {
    throw ValidationError("simulate: tilt has wrong number of reactions");
  }
  if (tilt && std::abs(tilt->horizon() - horizon) > 1e-12 * horizon) {
    throw ValidationError("simulate: tilt horizon differs from the simulation horizon");
  }
  StreamRng rng(seed, options.stream);
  JumpPath path{volume, CountVec(n0.begin(), n0.end()), horizon, {}};
  CountVec n = path.n0;
  const std::size_t nr = net.num_reactions();
  RealVec a(nr), weight(nr);
  double t = 0.0;
  double total = refresh_propensities(net, volume, n, a);

  auto draw_wait = [&](double rate) {
    for (;;) {
      const double dt = rng.exponential(rate);
      if (t + dt > t) return dt;
    }
  };
  auto record = [&](std::size_t r) {
    if (path.events.size() >= options.max_events) {
      throw NumericalError("simulate: event cap of " + std::to_string(options.max_events) +
                           " exceeded (near-explosion)");
    }
    path.events.push_back({t, static_cast<std::uint32_t>(r)});
    fire(net, n, r);
    total = refresh_propensities(net, volume, n, a);
  };

  if (!tilt) {
    while (total > 0.0) {
      t += draw_wait(total);
      if (t > horizon) break;
      record(select(a, total, rng.uniform()));
    }
    return path;
  }

  while (total > 0.0) {
    double majorant = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      if (a[r] > 0.0) majorant += a[r] * std::exp(tilt->max_after(t, r));
    }
    if (!std::isfinite(majorant)) throw NumericalError("simulate: tilted majorant overflow");
    if (majorant <= 0.0) break;
    t += draw_wait(majorant);
    if (t > horizon) break;
    double accepted = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      weight[r] = a[r] > 0.0 ? a[r] * std::exp(tilt->value(t, r)) : 0.0;
      accepted += weight[r];
    }
    if (accepted < majorant && rng.uniform() * majorant >= accepted) continue;
    record(select(weight, accepted, rng.uniform()));
  }
  return path;
}

CountState count_state(const ReactionNetwork& net, const JumpPath& path, double t) {
  if (t < 0.0 || t > path.horizon) throw ValidationError("path_eval: time outside [0, T]");
  CountState s{path.n0, std::vector<std::int64_t>(net.num_reactions(), 0)};
  for (const auto& e : path.events) {
    if (e.time > t) break;
    ++s.fired[e.reaction];
    const auto& g = net.reaction(e.reaction).gamma;
    for (std::size_t y = 0; y < s.n.size(); ++y) s.n[y] += g[y];
  }
  return s;
}

std::pair<RealVec, RealVec> path_eval(const ReactionNetwork& net, const JumpPath& path, double t) {
  const CountState s = count_state(net, path, t);
  const double v = static_cast<double>(path.volume);
  RealVec c(s.n.size()), w(s.fired.size());
  for (std::size_t y = 0; y < c.size(); ++y) c[y] = static_cast<double>(s.n[y]) / v;
  for (std::size_t r = 0; r < w.size(); ++r) w[r] = static_cast<double>(s.fired[r]) / v;
  return {c, w};
}

GridPath to_grid(const ReactionNetwork& net, const JumpPath& path, std::size_t steps) {
  if (steps < 2) throw ValidationError("to_grid: need at least two steps");
  const double v = static_cast<double>(path.volume);
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  std::vector<RealVec> c(steps + 1, RealVec(ny)), w(steps + 1, RealVec(nr));
  CountVec n = path.n0;
  std::vector<std::int64_t> fired(nr, 0);
  std::size_t next = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tk = k == steps ? path.horizon : path.horizon * static_cast<double>(k) / static_cast<double>(steps);
    while (next < path.events.size() && path.events[next].time <= tk) {
      const auto r = path.events[next].reaction;
      ++fired[r];
      const auto& g = net.reaction(r).gamma;
      for (std::size_t y = 0; y < ny; ++y) n[y] += g[y];
      ++next;
    }
    for (std::size_t y = 0; y < ny; ++y) c[k][y] = static_cast<double>(n[y]) / v;
    for (std::size_t r = 0; r < nr; ++r) w[k][r] = static_cast<double>(fired[r]) / v;
  }
  GridPath g(path.horizon, std::move(c), std::move(w));
  g.total_variation = static_cast<double>(path.events.size()) / v;
  return g;
}

void validate_path(const ReactionNetwork& net, const JumpPath& path) {
  if (path.volume <= 0) throw ValidationError("jump path: volume must be positive");
  if (path.n0.size() != net.num_species()) throw ValidationError("jump path: initial counts have wrong length");
  if (!(path.horizon > 0.0)) throw ValidationError("jump path: horizon must be positive");
  CountVec n = path.n0;
  for (auto x : n) {
    if (x < 0) throw ValidationError("jump path: negative initial count");
  }
  double prev = 0.0;
  for (std::size_t i = 0; i < path.events.size(); ++i) {
    const auto& e = path.events[i];
    if (!(e.time > prev) || e.time > path.horizon) {
      throw ValidationError("jump path: event " + std::to_string(i) + " time not strictly increasing within (0, T]");
    }
    if (e.reaction >= net.num_reactions()) throw ValidationError("jump path: unknown reaction index");
    const auto& g = net.reaction(e.reaction).gamma;
    for (std::size_t y = 0; y < n.size(); ++y) {
      n[y] += g[y];
      if (n[y] < 0) throw ValidationError("jump path: count goes negative at event " + std::to_string(i));
    }
    prev = e.time;
  }
}

JumpPath restrict_path(const ReactionNetwork& net, const JumpPath& path, double a, double b) {
  if (!(0.0 <= a && a < b && b <= path.horizon)) throw ValidationError("restrict_path: need 0 <= a < b <= T");
  JumpPath out{path.volume, count_state(net, path, a).n, b - a, {}};
  for (const auto& e : path.events) {
    if (e.time > a && e.time <= b) out.events.push_back({e.time - a, e.reaction});
  }
  return out;
}

nlohmann::json path_to_json(const JumpPath& path) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : path.events) events.push_back(nlohmann::json::array({e.time, e.reaction}));
  return {{"V", path.volume}, {"c0", path.n0}, {"T", path.horizon}, {"events", std::move(events)}};
}

JumpPath path_from_json(const nlohmann::json& j) {
  try {
    JumpPath p;
    p.volume = j.at("V").get<std::int64_t>();
    p.n0 = j.at("c0").get<CountVec>();
    p.horizon = j.at("T").get<double>();
    for (const auto& e : j.at("events")) {
      if (!e.is_array() || e.size() != 2) throw ValidationError("jump path json: events must be [t, r] pairs");
      p.events.push_back({e[0].get<double>(), e[1].get<std::uint32_t>()});
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("jump path json: ") + e.what());
  }
}

namespace {

template <class T>
void put(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ValidationError("jump path binary: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

constexpr char kMagic[4] = {'F', 'L', 'X', 'J'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void write_path_binary(std::ostream& os, const JumpPath& path) {
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kVersion);
  put<std::int64_t>(os, path.volume);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(path.n0.size()));
  for (auto n : path.n0) put<std::int64_t>(os, n);
  put<double>(os, path.horizon);
  put<std::uint64_t>(os, path.events.size());
  for (const auto& e : path.events) put<double>(os, e.time);
  for (const auto& e : path.events) put<std::uint32_t>(os, e.reaction);
}

JumpPath read_path_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ValidationError("jump path binary: bad magic");
  if (get<std::uint32_t>(is) != kVersion) throw ValidationError("jump path binary: unsupported version");
  JumpPath p;
  p.volume = get<std::int64_t>(is);
  const auto ny = get<std::uint32_t>(is);
  for (std::uint32_t y = 0; y < ny; ++y) p.n0.push_back(get<std::int64_t>(is));
  p.horizon = get<double>(is);
  const auto count = get<std::uint64_t>(is);
  p.events.resize(count);
  for (auto& e : p.events) e.time = get<double>(is);
  for (auto& e : p.events) e.reaction = get<std::uint32_t>(is);
  return p;
}

double martingale_value(const ReactionNetwork& net, const JumpPath& path, TestFunction kind,
                        std::span<const double> zeta) {
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  const bool joint = zeta.size() == ny + nr;
  if (!joint && zeta.size() != nr) throw ValidationError("martingale: zeta must have |R| or |Y|+|R| entries");
  const double v = static_cast<double>(path.volume);

  // Increment of ζ·x caused by one firing of r.
  RealVec jump(nr, 0.0);
  for (std::size_t r = 0; r < nr; ++r) {
    double d = zeta[joint ? ny + r : r];
    if (joint) {
      for (std::size_t y = 0; y < ny; ++y) d += zeta[y] * net.gamma(y, r);
    }
    jump[r] = d / v;
  }
  CountVec n = path.n0;
  double phase = 0.0;
  if (joint) {
    for (std::size_t y = 0; y < ny; ++y) phase += zeta[y] * static_cast<double>(n[y]) / v;
  }
  const double phase0 = phase;
  RealVec a(nr);
  double t = 0.0, integral = 0.0;
  auto accumulate = [&](double until) {
    double q = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      a[r] = micro_propensity(net.reaction(r), path.volume, n);
      q += a[r] * (kind == TestFunction::linear ? jump[r] : std::expm1(jump[r]));
    }
    if (kind == TestFunction::exponential) q *= std::exp(phase);
    integral += q * (until - t);
    t = until;
  };
  for (const auto& e : path.events) {
    accumulate(e.time);
    const auto& g = net.reaction(e.reaction).gamma;
    for (std::size_t y = 0; y < ny; ++y) n[y] += g[y];
    phase += jump[e.reaction];
  }
  accumulate(path.horizon);
  const double df = kind == TestFunction::linear ? phase - phase0 : std::exp(phase) - std::exp(phase0);
  return df - integral;
}

MartingaleResult martingale_residual(const ReactionNetwork& net, std::int64_t volume, std::span<const std::int64_t> n0,
                                     double horizon, TestFunction kind, std::span<const double> zeta,
                                     std::size_t replicas, std::uint64_t seed, int threads) {
  if (replicas < 2) throw ValidationError("martingale_residual: need at least two replicas");
  std::vector<double> values(replicas);
  parallel_for(replicas, threads, [&](std::size_t i) {
    SimulateOptions opt;
    opt.stream = i;
    const JumpPath p = simulate(net, volume, n0, horizon, seed, nullptr, opt);
    values[i] = martingale_value(net, p, kind, zeta);
  });
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(replicas);
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);
  var /= static_cast<double>(replicas - 1);
  return {mean, std::sqrt(var / static_cast<double>(replicas)), replicas};
}

}  // namespace fluxldp
