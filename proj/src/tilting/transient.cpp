#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "fluxldp/errors.hpp"
#include "fluxldp/tilting.hpp"

namespace fluxldp {

namespace {

struct StateHash {
  std::size_t operator()(const CountVec& v) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto x : v) {
      h ^= static_cast<std::uint64_t>(x) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

struct Transition {
  std::size_t to;  // kSink when the move leaves the capped space
  double rate;
};

constexpr std::size_t kSink = std::numeric_limits<std::size_t>::max();

}  // namespace

double TransientDistribution::mass(const std::function<bool(const CountVec&)>& test) const {
  double m = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (test(states[i])) m += probability[i];
  }
  return m;
}

void TransientDistribution::write_csv(std::ostream& os, const ReactionNetwork& net) const {
  bool first = true;
  for (const auto& s : net.species()) {
    os << (first ? "" : ",") << "n:" << s;
    first = false;
  }
  if (tracks_fluxes) {
    for (std::size_t r = 0; r < net.num_reactions(); ++r) os << ",m:" << r;
  }
  os << ",probability\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t d = 0; d < states[i].size(); ++d) os << (d ? "," : "") << states[i][d];
    os << ',' << probability[i] << '\n';
  }
  os.precision(old);
}

TransientDistribution exact_transient(const ReactionNetwork& net, std::int64_t volume,
                                      std::span<const std::int64_t> n0, double horizon,
                                      const TransientOptions& opt) {
  const std::size_t ny = net.num_species(), nr = net.num_reactions();
  if (volume <= 0) throw ValidationError("exact_transient: volume must be positive");
  if (n0.size() != ny) throw ValidationError("exact_transient: initial counts have wrong length");
  if (!(horizon >= 0.0)) throw ValidationError("exact_transient: horizon must be non-negative");
  for (auto x : n0) {
    if (x < 0) throw ValidationError("exact_transient: initial counts must be non-negative");
  }
  std::vector<std::int64_t> cap(ny);
  if (opt.species_cap.empty()) {
    const std::int64_t top = *std::max_element(n0.begin(), n0.end());
    std::fill(cap.begin(), cap.end(), 4 * top + 50);
  } else if (opt.species_cap.size() == 1) {
    std::fill(cap.begin(), cap.end(), opt.species_cap[0]);
  } else if (opt.species_cap.size() == ny) {
    cap = opt.species_cap;
  } else {
    throw ValidationError("exact_transient: species_cap has wrong length");
  }
  for (std::size_t y = 0; y < ny; ++y) {
    if (n0[y] > cap[y]) throw ValidationError("exact_transient: initial state exceeds the cap");
  }
  std::vector<std::int64_t> fcap(nr, std::numeric_limits<std::int64_t>::max());
  if (!opt.flux_cap.empty()) {
    if (opt.flux_cap.size() == 1) {
      std::fill(fcap.begin(), fcap.end(), opt.flux_cap[0]);
    } else if (opt.flux_cap.size() == nr) {
      fcap = opt.flux_cap;
    } else {
      throw ValidationError("exact_transient: flux_cap has wrong length");
    }
  }
  RealVec mult(nr, 1.0);
  if (!opt.rate_multipliers.empty()) {
    if (opt.rate_multipliers.size() != nr) throw ValidationError("exact_transient: rate_multipliers has wrong length");
    mult = opt.rate_multipliers;
    for (double m : mult) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError("exact_transient: multipliers must be finite, >= 0");
    }
  }

  // Breadth-first enumeration of the capped reachable set.
  TransientDistribution out;
  out.num_species = ny;
  out.tracks_fluxes = opt.track_fluxes;
  std::unordered_map<CountVec, std::size_t, StateHash> index;
  std::vector<std::vector<Transition>> moves;
  CountVec start(n0.begin(), n0.end());
  if (opt.track_fluxes) start.resize(ny + nr, 0);
  index.emplace(start, 0);
  out.states.push_back(start);
  std::deque<std::size_t> queue{0};
  CountVec counts(ny);
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const CountVec s = out.states[i];
    std::copy(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(ny), counts.begin());
    std::vector<Transition> list;
    for (std::size_t r = 0; r < nr; ++r) {
      const double a = micro_propensity(net.reaction(r), volume, counts) * mult[r];
      if (!(a > 0.0)) continue;
      if (!std::isfinite(a)) throw NumericalError("exact_transient: non-finite propensity");
      CountVec next = s;
      bool inside = true;
      for (std::size_t y = 0; y < ny; ++y) {
        next[y] += net.gamma(y, r);
        if (next[y] > cap[y]) inside = false;
      }
      if (opt.track_fluxes && ++next[ny + r] > fcap[r]) inside = false;
      if (!inside) {
        list.push_back({kSink, a});
        continue;
      }
      auto [it, fresh] = index.emplace(next, out.states.size());
      if (fresh) {
        if (out.states.size() >= opt.max_states) {
          throw OracleError("exact_transient: reachable state space exceeds " + std::to_string(opt.max_states) +
                            " states");
        }
        out.states.push_back(next);
        queue.push_back(it->second);
      }
      list.push_back({it->second, a});
    }
    if (moves.size() <= i) moves.resize(i + 1);
    moves[i] = std::move(list);
  }
  moves.resize(out.states.size());

  const std::size_t n = out.states.size();
  RealVec exit(n, 0.0);
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& m : moves[i]) exit[i] += m.rate;
    q = std::max(q, exit[i]);
  }
  out.probability.assign(n, 0.0);
  if (horizon == 0.0 || q == 0.0) {
    out.probability[0] = 1.0;
    return out;
  }

  // p(T) = Σ_k Pois(k; qT) v_k with v_{k+1} = v_k (I + Q/q); the last slot is the sink.
  const double lambda = q * horizon;
  const std::size_t k_max = static_cast<std::size_t>(std::ceil(lambda + 60.0 * std::sqrt(lambda) + 300.0));
  RealVec v(n + 1, 0.0), next(n + 1, 0.0), acc(n + 1, 0.0);
  v[0] = 1.0;
  const double log_lambda = std::log(lambda);
  std::size_t k = 0;
  for (;; ++k) {
    const double log_weight = -lambda + static_cast<double>(k) * log_lambda - std::lgamma(static_cast<double>(k) + 1.0);
    const double weight = std::exp(log_weight);
    for (std::size_t i = 0; i <= n; ++i) acc[i] += weight * v[i];
    if (k >= k_max) break;
    if (static_cast<double>(k) + 2.0 > lambda) {
      // P(N > k) ≤ Pois(k+1) / (1 − λ/(k+2)).
      const double log_tail = log_weight + log_lambda - std::log(static_cast<double>(k) + 1.0) -
                              std::log1p(-lambda / (static_cast<double>(k) + 2.0));
      double min_pos = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (acc[i] > 0.0) min_pos = std::min(min_pos, acc[i]);
      }
      if (log_tail < std::log(opt.rel_tol) + std::log(min_pos)) break;
    }
    std::fill(next.begin(), next.end(), 0.0);
    next[n] = v[n];
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == 0.0) continue;
      next[i] += v[i] * (1.0 - exit[i] / q);
      for (const auto& m : moves[i]) next[m.to == kSink ? n : m.to] += v[i] * (m.rate / q);
    }
    v.swap(next);
  }
  out.poisson_terms = k + 1;
  std::copy(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(n), out.probability.begin());
  out.truncated_mass = acc[n];
  if (out.truncated_mass > opt.truncation_threshold) {
    throw OracleError("exact_transient: truncated mass " + std::to_string(out.truncated_mass) +
                      " exceeds the threshold; raise the caps");
  }
  return out;
}

}  // namespace fluxldp
