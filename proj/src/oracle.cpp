#include "popt/oracle.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "popt/errors.hpp"

namespace popt {

namespace {

class Search {
 public:
  Search(const AuctionInstance& inst, std::span<const double> coefficients, std::span<const double> supplies,
         std::size_t max_states)
      : inst_(inst), nb_(inst.n_bundles()), n_agents_(static_cast<std::size_t>(inst.n_agents)),
        coefficients_(coefficients), residual_(supplies.begin(), supplies.end()), max_states_(max_states),
        current_(n_agents_), best_(n_agents_) {
    // Candidate bundles per agent, best first, and the optimistic tail bound.
    candidates_.resize(n_agents_);
    suffix_bound_.assign(n_agents_ + 1, 0.0);
    for (std::size_t i = 0; i < n_agents_; ++i) {
      for (std::size_t b = 0; b < nb_; ++b) {
        if (coefficients_[var_index(i, b, nb_)] > 0.0) candidates_[i].push_back(b);
      }
      std::stable_sort(candidates_[i].begin(), candidates_[i].end(), [&](std::size_t a, std::size_t b) {
        return coefficients_[var_index(i, a, nb_)] > coefficients_[var_index(i, b, nb_)];
      });
    }
    for (std::size_t i = n_agents_; i-- > 0;) {
      const double top = candidates_[i].empty() ? 0.0 : coefficients_[var_index(i, candidates_[i].front(), nb_)];
      suffix_bound_[i] = suffix_bound_[i + 1] + top;
    }
  }

  OracleResult run() {
    visit(0, 0.0);
    return OracleResult{best_, best_value_, states_};
  }

 private:
  bool fits(const Bundle& b) const {
    for (std::size_t j = 0; j < residual_.size(); ++j) {
      if (b[j] > residual_[j] + 1e-9) return false;
    }
    return true;
  }

  void visit(std::size_t agent, double value) {
    if (++states_ > max_states_) {
      throw OracleTooLarge("exact search exceeded " + std::to_string(max_states_) + " states");
    }
    if (agent == n_agents_) {
      if (value > best_value_) {
        best_value_ = value;
        best_ = current_;
      }
      return;
    }
    if (value + suffix_bound_[agent] <= best_value_) return;
    const BundleSpace& bundles = *inst_.bundles;
    for (std::size_t b : candidates_[agent]) {
      const Bundle& bundle = bundles[b];
      if (!fits(bundle)) continue;
      for (std::size_t j = 0; j < residual_.size(); ++j) residual_[j] -= bundle[j];
      current_.bundle_of[agent] = static_cast<std::int32_t>(b);
      visit(agent + 1, value + coefficients_[var_index(agent, b, nb_)]);
      current_.bundle_of[agent] = Allocation::kUnassigned;
      for (std::size_t j = 0; j < residual_.size(); ++j) residual_[j] += bundle[j];
    }
    visit(agent + 1, value);
  }

  const AuctionInstance& inst_;
  std::size_t nb_;
  std::size_t n_agents_;
  std::span<const double> coefficients_;
  std::vector<double> residual_;
  std::size_t max_states_;
  std::size_t states_ = 0;
  std::vector<std::vector<std::size_t>> candidates_;
  std::vector<double> suffix_bound_;
  Allocation current_;
  Allocation best_;
  double best_value_ = 0.0;
};

}  // namespace

OracleResult ip_oracle(const AuctionInstance& instance, std::span<const double> coefficients,
                       std::span<const double> supplies, std::size_t max_states) {
  if (coefficients.size() != instance.num_variables()) throw InvalidConfig("coefficient vector size mismatch");
  if (supplies.size() != static_cast<std::size_t>(instance.n_goods)) throw InvalidConfig("supply vector size mismatch");
  return Search(instance, coefficients, supplies, max_states).run();
}

OracleResult ip_oracle(const AuctionInstance& instance, std::size_t max_states) {
  return ip_oracle_relaxed(instance, 0, max_states);
}

OracleResult ip_oracle_relaxed(const AuctionInstance& instance, int extra, std::size_t max_states) {
  std::vector<double> supplies(instance.supplies.begin(), instance.supplies.end());
  for (double& s : supplies) s += extra;
  return ip_oracle(instance, instance.valuations, supplies, max_states);
}

}  // namespace popt
