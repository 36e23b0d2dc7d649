#pragma once

// Iterative rounding IR(z; c): repeatedly fix integral coordinates, re-solve
// the restricted LP for an extreme point, and drop supply rows that can no
// longer be exceeded by more than k - 1 units.

#include <cstddef>
#include <span>
#include <vector>

#include "popt/auction.hpp"

namespace popt {

inline constexpr double kIntegralityTol = 1e-7;
inline constexpr double kTightDemandTol = 1e-7;

/// The data IR needs besides the point and the reward vector. `supplies` is the
/// supply vector the input point satisfies.
struct RoundingProblem {
  const BundleSpace* bundles = nullptr;
  std::size_t n_agents = 0;
  std::vector<double> supplies;
  int k = 1;

  /// Uses the perturbed supplies s~.
  static RoundingProblem from(const PerturbedInstance& p);
  /// Uses the integer supplies s.
  static RoundingProblem with_base_supplies(const PerturbedInstance& p);
};

struct FractionalVar {
  std::size_t agent;
  std::size_t bundle;
  double value;
};

struct RoundingState {
  std::size_t tau = 0;
  std::vector<char> active_goods;               // G^(tau)
  std::vector<FractionalVar> fractional;        // B_i^(tau), flattened
  std::vector<double> residual_supplies;        // s~^(tau)
  std::vector<char> tight_agents;               // N^(tau)
  Allocation fixed;                             // coordinates already fixed to 1

  std::size_t active_count() const;
};

struct RoundingTrace {
  std::size_t iterations = 0;
  std::size_t lp_solves = 0;
  std::size_t drops = 0;
  // #fractional variables + #active supply rows after each iteration.
  std::vector<std::size_t> progress;
};

/// Removes every active good whose residual footprint
/// sum_{fractional (i,B)} B_j is at most ceil(s~_j) + k - 1. Returns the new
/// active set. Throws RoundingStall when nothing can be removed.
std::vector<char> drop_rule(const RoundingState& state, const BundleSpace& bundles, int k);

/// z and c use the flat (agent, bundle) layout. The output is 0/1, keeps every
/// zero of z at zero, keeps every tight demand row tight, satisfies
/// (Supply + k - 1) w.r.t. ceil(problem.supplies) and has c.out >= c.z.
Allocation iterative_rounding(std::span<const double> z, std::span<const double> c,
                              const RoundingProblem& problem, RoundingTrace* trace = nullptr);

inline Allocation iterative_rounding(std::span<const double> z, std::span<const double> c,
                                     const PerturbedInstance& ctx, RoundingTrace* trace = nullptr) {
  return iterative_rounding(z, c, RoundingProblem::from(ctx), trace);
}

}  // namespace popt
