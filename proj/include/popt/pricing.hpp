#pragma once

// Per-good prices from the LP dual, and checks of the supporting-price and
// approximate envy-freeness conditions for an integral allocation.

#include <cstddef>
#include <vector>

#include "popt/auction.hpp"
#include "popt/lp_solver.hpp"

namespace popt {

struct PriceVector {
  std::vector<double> prices;  // p_j >= 0

  std::size_t size() const { return prices.size(); }
  double operator[](std::size_t good) const { return prices[good]; }
};

/// Supply-row duals of the weighted LP, clamped below at 0.
PriceVector popt_prices(const lp::Solution& lip, const AuctionInstance& instance);

/// sum_j B_j p_j.
double bundle_price(const Bundle& bundle, const PriceVector& prices);

/// Price of an agent's holding; 0 when unassigned.
double allocation_price(const Allocation& allocation, std::size_t agent, const BundleSpace& bundles,
                        const PriceVector& prices);

struct VerificationReport {
  double epsilon_u = 0.0;
  // Realized payoff minus the best payoff available at these prices (the empty
  // allocation included). Always <= 0 up to rounding.
  std::vector<double> payoff_difference;
  double supporting_violation = 0.0;  // worst shortfall against the agent's best bundle
  double envy_violation = 0.0;        // worst max_{i,k} (payoff of i on k's bundle - own payoff)
  bool supporting_pass = true;
  bool envy_pass = true;
  // The envy condition read with +epsilon_u on the right-hand side.
  bool envy_literal_pass = true;
};

/// Fills payoff_difference and the supporting-price fields.
VerificationReport verify_supporting(const Allocation& allocation, const PriceVector& prices,
                                     const AuctionInstance& instance, double epsilon_u);

/// Fills payoff_difference and the envy fields.
VerificationReport verify_envy_free(const Allocation& allocation, const PriceVector& prices,
                                    const AuctionInstance& instance, double epsilon_u);

/// Both checks in one report, each at its own tolerance.
VerificationReport verify_prices(const Allocation& allocation, const PriceVector& prices,
                                 const AuctionInstance& instance, double supporting_eps, double envy_eps);

/// Largest amount by which some agent's weighted payoff w u - P at its holding
/// (0 when unassigned) falls short of its best weighted payoff. Zero up to
/// rounding for every point of a lottery built on an optimal LP solution.
double weighted_argmax_gap(const Allocation& allocation, const PriceVector& prices, const PerturbedInstance& ctx);

}  // namespace popt
