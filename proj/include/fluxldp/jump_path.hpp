#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "fluxldp/grid_path.hpp"
#include "fluxldp/network.hpp"
#include "fluxldp/tilt.hpp"

namespace fluxldp {

struct JumpEvent {
  double time;
  std::uint32_t reaction;

  bool operator==(const JumpEvent&) const = default;
};

/// Exact trajectory of (C^V, W^V) on [0, T]: initial counts and the ordered jump events.
struct JumpPath {
  std::int64_t volume = 1;
  CountVec n0;  // molecule counts at t = 0
  double horizon = 1.0;
  std::vector<JumpEvent> events;

  bool operator==(const JumpPath&) const = default;
};

struct SimulateOptions {
  std::uint64_t max_events = 100'000'000;
  std::uint64_t stream = 0;  // replica index selecting the RNG stream
};

/// Gillespie simulation; with a tilt, Ogata thinning against Σ_r k^{V,r}·exp(max_{s≥t} ζ^{(r)}(s)).
/// A tilt that is identically zero reproduces the untilted path bit for bit.
JumpPath simulate(const ReactionNetwork& net, std::int64_t volume, std::span<const std::int64_t> n0,
                  double horizon, std::uint64_t seed, const TiltProtocol* tilt = nullptr,
                  const SimulateOptions& options = {});

/// Counts and event tallies at time t (right-continuous).
struct CountState {
  CountVec n;
  std::vector<std::int64_t> fired;
};
CountState count_state(const ReactionNetwork& net, const JumpPath& path, double t);

/// (c, w) at time t, right-continuous; c = n0/V + Γw exactly in count arithmetic.
std::pair<RealVec, RealVec> path_eval(const ReactionNetwork& net, const JumpPath& path, double t);

/// Samples the path on the uniform grid with `steps` cells.
GridPath to_grid(const ReactionNetwork& net, const JumpPath& path, std::size_t steps);

/// Checks ordering, reaction ids, horizon and nonnegativity; throws ValidationError.
void validate_path(const ReactionNetwork& net, const JumpPath& path);

/// Restriction to [a, b], re-based so that time a becomes 0.
JumpPath restrict_path(const ReactionNetwork& net, const JumpPath& path, double a, double b);

nlohmann::json path_to_json(const JumpPath& path);
JumpPath path_from_json(const nlohmann::json& j);

/// Little-endian binary form: "FLXJ", u32 version, i64 V, u32 species, i64 n0[], f64 T,
/// u64 event count, f64 times[], u32 reactions[].
void write_path_binary(std::ostream& os, const JumpPath& path);
JumpPath read_path_binary(std::istream& is);

enum class TestFunction { linear, exponential };

struct MartingaleResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
};

/// M^f(T) = f(X_T) − f(X_0) − ∫₀ᵀ 𝒬f(X_s) ds for f(x) = ζ·x or exp(ζ·x), x = w when ζ has
/// |ℛ| entries and x = (c, w) when it has |𝒴| + |ℛ| entries; ζ is constant in time.
double martingale_value(const ReactionNetwork& net, const JumpPath& path, TestFunction kind,
                        std::span<const double> zeta);

MartingaleResult martingale_residual(const ReactionNetwork& net, std::int64_t volume,
                                     std::span<const std::int64_t> n0, double horizon, TestFunction kind,
                                     std::span<const double> zeta, std::size_t replicas, std::uint64_t seed,
                                     int threads = 0);

}  // namespace fluxldp
