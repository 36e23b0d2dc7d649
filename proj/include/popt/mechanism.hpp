#pragma once

// The full pipeline: perturb, solve the weighted LP, build the lottery, price
// from the dual, draw one allocation and verify every lottery point.

#include <cstddef>
#include <vector>

#include "popt/auction.hpp"
#include "popt/lottery.hpp"
#include "popt/lp_solver.hpp"
#include "popt/pricing.hpp"

namespace popt {

struct MechanismOptions {
  // Re-solve the modified LP for every lottery point when the instance has at
  // most this many variables; larger instances get the dual certificate only.
  std::size_t mlip_resolve_limit = 5000;
  bool verify_mlip = true;
  LotteryOptions lottery;
};

struct MechanismResult {
  PerturbedInstance perturbed;
  lp::Solution lip;
  Lottery lottery;
  PriceVector prices;
  std::size_t sampled = 0;  // index into lottery.points
  double epsilon_u = 0.0;
  double lp_objective = 0.0;        // weighted LP optimum
  double expected_objective = 0.0;  // sum_t lambda_t (w u) . x^t
  std::vector<VerificationReport> reports;  // one per lottery point
  std::vector<MlipReport> mlip;             // one per lottery point when verified

  const Allocation& allocation() const { return lottery.points[sampled]; }
  bool all_passed() const;
};

/// Throws VerificationFailure when a structural guarantee fails (membership,
/// modified-LP optimality, expected objective); price checks are reported.
MechanismResult run_mechanism(const AuctionInstance& instance, const MechanismConfig& cfg, Rng& rng,
                              const MechanismOptions& options = {});

}  // namespace popt
