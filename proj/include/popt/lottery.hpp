#pragma once

// Lottery construction: grow a set F of integral allocations until the LP
// optimum x* lies (within epsilon) in conv(F), then read the mixing weights
// off the nearest-point projection.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "popt/auction.hpp"
#include "popt/hull.hpp"
#include "popt/lp_solver.hpp"

namespace popt {

inline constexpr double kSupportWeightTol = 1e-9;

struct Lottery {
  std::vector<Allocation> points;
  std::vector<double> weights;
  double residual = 0.0;  // ||sum_t lambda_t x^t - x*||
  std::size_t iterations = 0;

  std::size_t size() const { return points.size(); }
  /// sum_t lambda_t x^t in the flat variable layout.
  std::vector<double> expectation(std::size_t n_bundles) const;
};

struct LotteryOptions {
  std::size_t divergence_window = 50;
  std::size_t max_iterations = 100000;
};

/// delta_eps / sqrt(|N| * sum_B B_j^2), evaluated for good 0. Throws
/// VerificationFailure if good 1 yields a different value.
double perturbation_step(const PerturbedInstance& ctx, double delta_eps);

/// x_star must be an optimal solution of the weighted LP for ctx.
Lottery construct_lottery(std::span<const double> x_star, const PerturbedInstance& ctx, const MechanismConfig& cfg,
                          const LotteryOptions& options = {});

/// Index t drawn with probability lambda_t.
std::size_t sample_index(const Lottery& lottery, Rng& rng);

inline const Allocation& sample(const Lottery& lottery, Rng& rng) { return lottery.points[sample_index(lottery, rng)]; }

/// Checks a point against the membership conditions used by the lottery:
/// zeros of x* stay zero, tight demand rows of x* stay tight, and
/// (Supply + k - 1) holds. Returns an empty string on success, otherwise a
/// description of the first violated condition.
std::string membership_violation(const Allocation& point, std::span<const double> x_star, const PerturbedInstance& ctx);

struct MlipReport {
  std::vector<double> supplies;  // s-bar
  double point_objective = 0.0;  // (w u) . point
  double mlip_objective = 0.0;   // optimum of the re-solved LP (when resolved)
  double cs_residual = 0.0;      // LIP duals against point under the s-bar LP
  bool resolved = false;
};

/// Builds s-bar for `point`, certifies that the LIP duals are optimal duals for
/// the s-bar LP with `point` as primal, and (when `resolve`) re-solves that LP
/// and compares objectives. Throws VerificationFailure naming the violated
/// condition.
MlipReport verify_mlip_optimality(const Allocation& point, const PerturbedInstance& ctx, std::span<const double> x_star,
                                  const lp::Solution& lip, bool resolve = true);

}  // namespace popt
