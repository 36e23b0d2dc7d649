#include "popt/spectrum.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <random>

#include "popt/errors.hpp"

namespace popt {

const char* to_string(UtilityModel model) {
  switch (model) {
    case UtilityModel::Linear: return "linear";
    case UtilityModel::Indicator: return "indicator";
  }
  return "unknown";
}

UtilityModel utility_model_from_string(const std::string& name) {
  if (name == "linear") return UtilityModel::Linear;
  if (name == "indicator") return UtilityModel::Indicator;
  throw InputError("model", "unknown utility model '" + name + "'");
}

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) throw InvalidConfig("grid dimensions must be positive");
  if (bands < 1) throw InvalidConfig("bands per cell must be positive");
  if (agents < 1) throw InvalidConfig("number of agents must be positive");
  if (max_bundle < 1) throw InvalidConfig("max bundle size must be positive");
  if (!(user_intensity >= 0.0)) throw InvalidConfig("user intensity must be non-negative");
  if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0)) {
    throw InvalidConfig("boundary fraction must lie in (0, 1)");
  }
}

std::vector<GridEdge> grid_edges(int rows, int cols) {
  std::vector<GridEdge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int cell = r * cols + c;
      if (r > 0) edges.push_back({cell, cell - cols});
      if (c > 0) edges.push_back({cell, cell - 1});
      if (c + 1 < cols) edges.push_back({cell, cell + 1});
      if (r + 1 < rows) edges.push_back({cell, cell + cols});
    }
  }
  return edges;
}

namespace {

AgentField draw_field(const GridSpec& spec, const std::vector<GridEdge>& edges, Rng& rng) {
  const auto cells = static_cast<std::size_t>(spec.n_cells());
  AgentField field;
  field.cell_users.assign(cells, 0.0);
  field.boundary_users.assign(edges.size(), 0.0);

  // Edge index per (cell, direction): up, left, right, down.
  std::vector<std::array<int, 4>> edge_at(cells, {-1, -1, -1, -1});
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int from = edges[e].from;
    const int to = edges[e].to;
    const int dir = to == from - spec.cols ? 0 : to == from - 1 ? 1 : to == from + 1 ? 2 : 3;
    edge_at[static_cast<std::size_t>(from)][static_cast<std::size_t>(dir)] = static_cast<int>(e);
  }

  const double strip = spec.boundary_fraction / 4.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    int users = 0;
    if (spec.user_intensity > 0.0) users = std::poisson_distribution<int>(spec.user_intensity)(rng);
    field.cell_users[cell] = users;
    const auto& around = edge_at[cell];
    for (int u = 0; u < users; ++u) {
      // x grows to the right, y grows downward.
      const double x = unit(rng);
      const double y = unit(rng);
      const bool in_strip[4] = {y < strip, x < strip, x > 1.0 - strip, y > 1.0 - strip};
      for (std::size_t dir = 0; dir < 4; ++dir) {
        if (in_strip[dir] && around[dir] >= 0) field.boundary_users[static_cast<std::size_t>(around[dir])] += 1.0;
      }
    }
  }
  return field;
}

}  // namespace

GridInstance generate_grid(const GridSpec& spec, Rng& rng) {
  spec.validate();
  GridInstance out;
  out.edges = grid_edges(spec.rows, spec.cols);
  out.instance = AuctionInstance::make(spec.agents, spec.n_cells(), spec.max_bundle,
                                       std::vector<int>(static_cast<std::size_t>(spec.n_cells()), spec.bands));
  out.fields.reserve(static_cast<std::size_t>(spec.agents));
  for (int i = 0; i < spec.agents; ++i) out.fields.push_back(draw_field(spec, out.edges, rng));

  const BundleSpace& bundles = *out.instance.bundles;
  for (std::size_t i = 0; i < out.fields.size(); ++i) {
    for (std::size_t b = 0; b < bundles.size(); ++b) {
      out.instance.value(i, b) = grid_utility(out.fields[i], out.edges, bundles[b], spec.model);
    }
  }
  return out;
}

double grid_utility(const AgentField& field, std::span<const GridEdge> edges, const Bundle& bundle,
                    UtilityModel model) {
  double value = 0.0;
  for (std::size_t j = 0; j < field.cell_users.size(); ++j) {
    const int held = bundle[j];
    value += field.cell_users[j] * (model == UtilityModel::Linear ? held : (held >= 1 ? 1 : 0));
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const int excess = bundle[static_cast<std::size_t>(edges[e].from)] - bundle[static_cast<std::size_t>(edges[e].to)];
    if (excess > 0) value -= excess * field.boundary_users[e];
  }
  return std::max(0.0, value);
}

BundleShape classify_bundle_shape(const Bundle& bundle, int rows, int cols) {
  if (bundle.counts.size() != static_cast<std::size_t>(rows * cols)) {
    throw InvalidConfig("bundle does not match the grid");
  }
  BundleShape shape;
  shape.size = bundle.size();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto cell = static_cast<std::size_t>(r * cols + c);
      if (bundle[cell] > 1) shape.multiband = true;
      if (bundle[cell] == 0) continue;
      if (c + 1 < cols && bundle[cell + 1] > 0) ++shape.internal_boundaries;
      if (r + 1 < rows && bundle[cell + static_cast<std::size_t>(cols)] > 0) ++shape.internal_boundaries;
    }
  }
  return shape;
}

}  // namespace popt
