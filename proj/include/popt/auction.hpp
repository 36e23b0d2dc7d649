#pragma once

// Auction instances over k-bundles, random perturbation of weights and
// supplies, and assembly of the weighted LP relaxation.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "popt/lp_solver.hpp"

namespace popt {

using Rng = std::mt19937_64;

/// Multiplicity vector over good types. Never empty: "no allocation" is a
/// separate state of an Allocation.
struct Bundle {
  std::vector<int> counts;

  int size() const;
  int operator[](std::size_t good) const { return counts[good]; }
  friend bool operator==(const Bundle&, const Bundle&) = default;
};

/// sum_{m=1}^{k} C(n_goods + m - 1, m), saturating at SIZE_MAX.
std::size_t k_bundle_count(int n_goods, int k);

inline constexpr std::size_t kDefaultBundleCap = 10'000'000;

/// All multisets of size 1..k, by size and then in descending lexicographic
/// order of the count vector: (1,0),(0,1),(2,0),(1,1),(0,2) for two goods.
std::vector<Bundle> enumerate_k_bundles(int n_goods, int k, std::size_t cap = kDefaultBundleCap);

/// Enumerated bundle space with reverse lookup.
class BundleSpace {
 public:
  BundleSpace(int n_goods, int k, std::size_t cap = kDefaultBundleCap);

  int n_goods() const { return n_goods_; }
  int k() const { return k_; }
  std::size_t size() const { return bundles_.size(); }
  const Bundle& operator[](std::size_t index) const { return bundles_[index]; }
  const std::vector<Bundle>& bundles() const { return bundles_; }
  auto begin() const { return bundles_.begin(); }
  auto end() const { return bundles_.end(); }

  std::optional<std::size_t> index_of(const Bundle& bundle) const;

  /// sum over the space of B_j^2.
  double sum_of_squares(int good) const;

 private:
  int n_goods_;
  int k_;
  std::vector<Bundle> bundles_;
  std::map<std::vector<int>, std::size_t> index_;
};

/// Flat index of x_i(B) in every LP built over an instance.
inline std::size_t var_index(std::size_t agent, std::size_t bundle, std::size_t n_bundles) {
  return agent * n_bundles + bundle;
}

struct AuctionInstance {
  int n_agents = 0;
  int n_goods = 0;
  int k = 0;
  std::vector<int> supplies;
  std::shared_ptr<const BundleSpace> bundles;
  // Dense u_i(B), agent-major over the bundle order. Unvalued bundles are 0.
  std::vector<double> valuations;
  // Optional type label per agent; empty when agents are untyped.
  std::vector<int> agent_types;

  static AuctionInstance make(int n_agents, int n_goods, int k, std::vector<int> supplies);

  std::size_t n_bundles() const { return bundles->size(); }
  std::size_t num_variables() const { return static_cast<std::size_t>(n_agents) * n_bundles(); }
  double value(std::size_t agent, std::size_t bundle) const { return valuations[var_index(agent, bundle, n_bundles())]; }
  double& value(std::size_t agent, std::size_t bundle) { return valuations[var_index(agent, bundle, n_bundles())]; }
  /// M_i = max_B u_i(B).
  double max_value(std::size_t agent) const;
  double max_value() const;

  void validate() const;
};

struct MechanismConfig {
  double delta_w = 1e-5;
  double delta_eps = 1e-3;
  double epsilon = 1e-6;
  // Acceptable utility error. When unset, 2 * delta_w * max_{i,B} u_i(B).
  std::optional<double> epsilon_u;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

double effective_epsilon_u(const MechanismConfig& cfg, const AuctionInstance& instance);

struct PerturbedInstance {
  AuctionInstance base;
  std::vector<double> weights;             // w_i(B), same layout as valuations
  std::vector<double> perturbed_supplies;  // s_j - eps_j

  /// w = 1 and s~ = s. Used for unperturbed relaxations and worked examples.
  static PerturbedInstance unperturbed(AuctionInstance instance);

  std::size_t n_bundles() const { return base.n_bundles(); }
  std::size_t num_variables() const { return base.num_variables(); }
  double weight(std::size_t agent, std::size_t bundle) const { return weights[var_index(agent, bundle, n_bundles())]; }
  /// c^(1) = w .* u over all variables.
  std::vector<double> weighted_values() const;
};

/// Draws w_i(B) ~ U[1 - delta_w, 1 + delta_w] (once per (type, bundle) when the
/// instance carries type labels), then eps_j ~ U[delta_eps, 2 delta_eps].
PerturbedInstance perturb(const AuctionInstance& instance, const MechanismConfig& cfg, Rng& rng);

/// max sum w u x  s.t.  demand rows (one per agent, first), supply rows
/// (one per good, after the demand rows) with rhs s~_j.
lp::LinearProgram build_lip(const PerturbedInstance& p);

/// Same structure with an arbitrary supply vector.
lp::LinearProgram build_lip(const PerturbedInstance& p, std::span<const double> supplies);

/// An integral allocation: the bundle index per agent, or kUnassigned.
struct Allocation {
  static constexpr std::int32_t kUnassigned = -1;
  std::vector<std::int32_t> bundle_of;

  Allocation() = default;
  explicit Allocation(std::size_t n_agents) : bundle_of(n_agents, kUnassigned) {}

  std::size_t n_agents() const { return bundle_of.size(); }
  bool assigned(std::size_t agent) const { return bundle_of[agent] != kUnassigned; }
  friend bool operator==(const Allocation&, const Allocation&) = default;

  /// Units of each good used.
  std::vector<int> consumption(const BundleSpace& bundles) const;
  /// 0/1 vector in the flat variable layout.
  std::vector<double> to_dense(std::size_t n_bundles) const;
  double objective(std::span<const double> coefficients, std::size_t n_bundles) const;
};

/// sum_j (consumption_j - s_j)^+.
int total_overallocation(const Allocation& allocation, const AuctionInstance& instance);

}  // namespace popt
