#pragma once

// Misreporting experiment over a typed population: how much one agent gains
// in expectation by reporting another type while everyone else is truthful.

#include <cstddef>
#include <vector>

#include "popt/auction.hpp"
#include "popt/mechanism.hpp"

namespace popt {

struct TypedPopulation {
  int n_goods = 1;
  int k = 1;
  std::vector<int> supplies;
  std::vector<std::vector<double>> type_values;  // per type, dense over the bundle order

  std::size_t n_types() const { return type_values.size(); }
  void validate() const;

  /// `per_type` agents of every type, type-major. When `reported` differs from
  /// `deviator_type`, the first agent of `deviator_type` reports `reported`
  /// (takes its values and its type label).
  AuctionInstance instantiate(std::size_t per_type, int deviator_type, int reported) const;
  AuctionInstance instantiate(std::size_t per_type) const { return instantiate(per_type, 0, 0); }
};

struct MisreportEstimate {
  double gain = 0.0;        // mean of misreport payoff - truthful payoff
  double half_width = 0.0;  // 95% normal half-width of the mean
  double truthful = 0.0;
  double misreport = 0.0;
  std::size_t replications = 0;
};

/// Expected payoff, under the true utilities of `true_type`, of the share held
/// by agents reporting `reported`: the lottery-weighted average over those
/// agents of u_true(B) - P(B).
double reporter_share_payoff(const MechanismResult& result, const AuctionInstance& reported_instance,
                             const TypedPopulation& pop, int true_type, int reported);

/// Replication r runs the truthful and the misreporting economies on the same
/// seed. Seeds are drawn from `rng`.
MisreportEstimate misreport_gain(const TypedPopulation& pop, std::size_t per_type, int true_type, int reported,
                                 const MechanismConfig& cfg, Rng& rng, std::size_t replications);

}  // namespace popt
