#pragma once

// Exact integer optimum by depth-first search over per-agent choices, for
// instances small enough to enumerate.

#include <cstddef>
#include <span>

#include "popt/auction.hpp"

namespace popt {

inline constexpr std::size_t kDefaultOracleStates = 1'000'000;

struct OracleResult {
  Allocation allocation;
  double value = 0.0;
  std::size_t states = 0;  // search nodes visited
};

/// max sum_i c_i(B_i) over integral allocations with one bundle (or none) per
/// agent and consumption <= supplies. Throws OracleTooLarge when the search
/// visits more than `max_states` nodes.
OracleResult ip_oracle(const AuctionInstance& instance, std::span<const double> coefficients,
                       std::span<const double> supplies, std::size_t max_states = kDefaultOracleStates);

/// Unweighted utilities at the instance supplies.
OracleResult ip_oracle(const AuctionInstance& instance, std::size_t max_states = kDefaultOracleStates);

/// Unweighted utilities at supplies s_j + extra.
OracleResult ip_oracle_relaxed(const AuctionInstance& instance, int extra,
                               std::size_t max_states = kDefaultOracleStates);

}  // namespace popt
