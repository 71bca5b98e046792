#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fluxldp/network.hpp"

namespace fluxldp {

/// Concentration and cumulative flux sampled on the uniform grid t_k = kT/K, k = 0..K.
struct GridPath {
  double horizon = 1.0;
  std::vector<RealVec> c;  // c[k][y]
  std::vector<RealVec> w;  // w[k][r], w[0] = 0
  /// Σ_r W^{(r)}(T) for paths sampled from a jump process (number of jumps / V); 0 otherwise.
  double total_variation = 0.0;
  std::vector<std::string> warnings;

  GridPath() = default;
  GridPath(double T, std::vector<RealVec> c, std::vector<RealVec> w);

  std::size_t steps() const { return c.size() - 1; }
  std::size_t num_nodes() const { return c.size(); }
  std::size_t num_species() const { return c.front().size(); }
  std::size_t num_reactions() const { return w.front().size(); }
  double dt() const { return horizon / static_cast<double>(steps()); }
  double time(std::size_t k) const { return horizon * static_cast<double>(k) / static_cast<double>(steps()); }

  /// (w[k+1] − w[k]) / Δt for cell k.
  RealVec forward_rate(std::size_t k) const;
  /// ẇ at node k: centered in the interior, one-sided at the ends.
  RealVec centered_rate(std::size_t k) const;
  /// ċ at node k with the same stencil.
  RealVec centered_concentration_rate(std::size_t k) const;

  /// max_k ‖c(t_k) − c(0) − Γw(t_k)‖∞.
  double continuity_residual(const ReactionNetwork& net) const;

  /// Throws ValidationError on a malformed grid (ragged arrays, fewer than two nodes, T ≤ 0).
  void validate_shape() const;
};

/// Linear interpolation of node values at time t.
RealVec interpolate(const std::vector<RealVec>& nodes, double horizon, double t);

/// Header "t,c:<species>...,w:<reaction index>..." after '#' comment lines.
void write_grid_csv(std::ostream& os, const ReactionNetwork& net, const GridPath& path,
                    const std::vector<std::string>& comments = {});
GridPath read_grid_csv(std::istream& is);

nlohmann::json grid_to_json(const GridPath& path);
GridPath grid_from_json(const nlohmann::json& j);

/// Sup norm over the grid of the difference in (c, w); grids must match.
double grid_sup_distance(const GridPath& a, const GridPath& b);

}  // namespace fluxldp
