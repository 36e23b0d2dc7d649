#pragma once

// Spectrum grid instances: each cell of an m x n arena is a good with s bands,
// agents value cells by the number of their end users there and pay a cost
// for users near the edge of a cell whose neighbor carries fewer bands.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "popt/auction.hpp"

namespace popt {

enum class UtilityModel {
  Linear,     // sum_j u_j B_j
  Indicator,  // sum_j u_j [B_j >= 1]
};

const char* to_string(UtilityModel model);
UtilityModel utility_model_from_string(const std::string& name);

struct GridSpec {
  int rows = 3;
  int cols = 3;
  int bands = 10;
  int agents = 30;
  int max_bundle = 4;
  double user_intensity = 20.0;    // expected users per cell per agent
  double boundary_fraction = 0.1;  // share of each cell's area lying in boundary strips
  std::uint64_t seed = 0;
  UtilityModel model = UtilityModel::Linear;

  int n_cells() const { return rows * cols; }
  /// Throws InvalidConfig.
  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Ordered adjacency (from, to) between 4-neighbour cells, cells numbered row-major.
struct GridEdge {
  int from;
  int to;
};

/// Both orientations of every adjacency; 2 (2mn - m - n) entries.
std::vector<GridEdge> grid_edges(int rows, int cols);

struct AgentField {
  std::vector<double> cell_users;      // per cell
  std::vector<double> boundary_users;  // per ordered edge, users of `from` in the strip facing `to`
};

struct GridInstance {
  AuctionInstance instance;
  std::vector<AgentField> fields;
  std::vector<GridEdge> edges;
};

/// Draws the user fields and fills valuations for every bundle.
GridInstance generate_grid(const GridSpec& spec, Rng& rng);

inline AuctionInstance generate(const GridSpec& spec, Rng& rng) { return generate_grid(spec, rng).instance; }

/// sum_j u_j B_j - sum_{(j,k) in E} (B_j - B_k)^+ c_jk, clipped at 0.
double grid_utility(const AgentField& field, std::span<const GridEdge> edges, const Bundle& bundle,
                    UtilityModel model = UtilityModel::Linear);

struct BundleShape {
  int size = 0;
  int internal_boundaries = 0;  // undirected adjacencies with both cells held
  bool multiband = false;       // some cell carries more than one band
};

BundleShape classify_bundle_shape(const Bundle& bundle, int rows, int cols);

}  // namespace popt
