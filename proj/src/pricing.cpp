#include "popt/pricing.hpp"

#include <algorithm>
#include <limits>

#include "popt/errors.hpp"

namespace popt {

namespace {

std::vector<double> bundle_prices(const BundleSpace& bundles, const PriceVector& prices) {
  std::vector<double> out(bundles.size());
  for (std::size_t b = 0; b < bundles.size(); ++b) out[b] = bundle_price(bundles[b], prices);
  return out;
}

// Payoff of `agent` when holding the bundle `holder` holds.
double payoff_on(const AuctionInstance& inst, const Allocation& allocation, std::size_t agent, std::size_t holder,
                 const std::vector<double>& price_of) {
  if (!allocation.assigned(holder)) return 0.0;
  const auto b = static_cast<std::size_t>(allocation.bundle_of[holder]);
  return inst.value(agent, b) - price_of[b];
}

double best_payoff(const AuctionInstance& inst, std::size_t agent, const std::vector<double>& price_of) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < price_of.size(); ++b) best = std::max(best, inst.value(agent, b) - price_of[b]);
  return best;
}

void check_sizes(const Allocation& allocation, const PriceVector& prices, const AuctionInstance& inst) {
  if (allocation.n_agents() != static_cast<std::size_t>(inst.n_agents)) {
    throw InvalidConfig("allocation has the wrong number of agents");
  }
  if (prices.size() != static_cast<std::size_t>(inst.n_goods)) throw InvalidConfig("price vector has the wrong size");
}

void fill_payoff_difference(VerificationReport& report, const Allocation& allocation, const AuctionInstance& inst,
                            const std::vector<double>& price_of) {
  const auto n = static_cast<std::size_t>(inst.n_agents);
  report.payoff_difference.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double realized = payoff_on(inst, allocation, i, i, price_of);
    report.payoff_difference[i] = realized - std::max(0.0, best_payoff(inst, i, price_of));
  }
}

}  // namespace

PriceVector popt_prices(const lp::Solution& lip, const AuctionInstance& instance) {
  if (!lip.optimal()) throw InvalidConfig("prices need an optimal LP solution");
  const auto n_agents = static_cast<std::size_t>(instance.n_agents);
  const auto n_goods = static_cast<std::size_t>(instance.n_goods);
  if (lip.duals.size() != n_agents + n_goods) throw InvalidConfig("LP duals do not match the instance");
  PriceVector p;
  p.prices.resize(n_goods);
  for (std::size_t j = 0; j < n_goods; ++j) p.prices[j] = std::max(0.0, lip.duals[n_agents + j]);
  return p;
}

double bundle_price(const Bundle& bundle, const PriceVector& prices) {
  double total = 0.0;
  for (std::size_t j = 0; j < bundle.counts.size(); ++j) total += bundle[j] * prices[j];
  return total;
}

double allocation_price(const Allocation& allocation, std::size_t agent, const BundleSpace& bundles,
                        const PriceVector& prices) {
  if (!allocation.assigned(agent)) return 0.0;
  return bundle_price(bundles[static_cast<std::size_t>(allocation.bundle_of[agent])], prices);
}

VerificationReport verify_supporting(const Allocation& allocation, const PriceVector& prices,
                                     const AuctionInstance& instance, double epsilon_u) {
  check_sizes(allocation, prices, instance);
  const std::vector<double> price_of = bundle_prices(*instance.bundles, prices);
  VerificationReport report;
  report.epsilon_u = epsilon_u;
  fill_payoff_difference(report, allocation, instance, price_of);
  for (std::size_t i = 0; i < allocation.n_agents(); ++i) {
    const double best = best_payoff(instance, i, price_of);
    const double shortfall =
        allocation.assigned(i) ? best - payoff_on(instance, allocation, i, i, price_of) : best;
    report.supporting_violation = std::max(report.supporting_violation, shortfall);
  }
  report.supporting_pass = report.supporting_violation <= epsilon_u;
  return report;
}

VerificationReport verify_envy_free(const Allocation& allocation, const PriceVector& prices,
                                    const AuctionInstance& instance, double epsilon_u) {
  check_sizes(allocation, prices, instance);
  const std::vector<double> price_of = bundle_prices(*instance.bundles, prices);
  VerificationReport report;
  report.epsilon_u = epsilon_u;
  fill_payoff_difference(report, allocation, instance, price_of);
  const std::size_t n = allocation.n_agents();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double own = payoff_on(instance, allocation, i, i, price_of);
    for (std::size_t other = 0; other < n; ++other) {
      if (other == i) continue;
      worst = std::max(worst, payoff_on(instance, allocation, i, other, price_of) - own);
    }
  }
  if (n < 2) worst = 0.0;
  report.envy_violation = std::max(0.0, worst);
  report.envy_pass = worst <= epsilon_u;
  report.envy_literal_pass = worst <= -epsilon_u;
  return report;
}

VerificationReport verify_prices(const Allocation& allocation, const PriceVector& prices,
                                 const AuctionInstance& instance, double supporting_eps, double envy_eps) {
  VerificationReport report = verify_supporting(allocation, prices, instance, supporting_eps);
  const VerificationReport envy = verify_envy_free(allocation, prices, instance, envy_eps);
  report.envy_violation = envy.envy_violation;
  report.envy_pass = envy.envy_pass;
  report.envy_literal_pass = envy.envy_literal_pass;
  return report;
}

double weighted_argmax_gap(const Allocation& allocation, const PriceVector& prices, const PerturbedInstance& ctx) {
  const AuctionInstance& inst = ctx.base;
  check_sizes(allocation, prices, inst);
  const std::vector<double> price_of = bundle_prices(*inst.bundles, prices);
  double gap = 0.0;
  for (std::size_t i = 0; i < allocation.n_agents(); ++i) {
    double best = 0.0;
    for (std::size_t b = 0; b < price_of.size(); ++b) {
      best = std::max(best, ctx.weight(i, b) * inst.value(i, b) - price_of[b]);
    }
    double held = 0.0;
    if (allocation.assigned(i)) {
      const auto b = static_cast<std::size_t>(allocation.bundle_of[i]);
      held = ctx.weight(i, b) * inst.value(i, b) - price_of[b];
    }
    gap = std::max(gap, best - held);
  }
  return gap;
}

}  // namespace popt
