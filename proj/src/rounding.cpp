#include "popt/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popt/errors.hpp"
#include "popt/lp_solver.hpp"

namespace popt {

RoundingProblem RoundingProblem::from(const PerturbedInstance& p) {
  return RoundingProblem{p.base.bundles.get(), static_cast<std::size_t>(p.base.n_agents), p.perturbed_supplies, p.base.k};
}

RoundingProblem RoundingProblem::with_base_supplies(const PerturbedInstance& p) {
  return RoundingProblem{p.base.bundles.get(), static_cast<std::size_t>(p.base.n_agents),
                         std::vector<double>(p.base.supplies.begin(), p.base.supplies.end()), p.base.k};
}

std::size_t RoundingState::active_count() const {
  return static_cast<std::size_t>(std::count(active_goods.begin(), active_goods.end(), 1));
}

std::vector<char> drop_rule(const RoundingState& state, const BundleSpace& bundles, int k) {
  const auto n_goods = static_cast<std::size_t>(bundles.n_goods());
  std::vector<double> footprint(n_goods, 0.0);
  for (const FractionalVar& v : state.fractional) {
    const Bundle& b = bundles[v.bundle];
    for (std::size_t j = 0; j < n_goods; ++j) footprint[j] += b[j];
  }
  std::vector<char> next = state.active_goods;
  bool dropped = false;
  for (std::size_t j = 0; j < n_goods; ++j) {
    if (!next[j]) continue;
    const double bound = std::ceil(std::max(0.0, state.residual_supplies[j]) - 1e-9) + k - 1;
    if (footprint[j] <= bound) {
      next[j] = 0;
      dropped = true;
    }
  }
  if (!dropped) {
    throw RoundingStall("no supply row satisfies the drop condition at iteration " + std::to_string(state.tau));
  }
  return next;
}

namespace {

std::vector<double> solve_restricted(const RoundingState& state, std::span<const double> c,
                                     const std::vector<double>& fixed_demand, const RoundingProblem& problem) {
  const BundleSpace& bundles = *problem.bundles;
  const std::size_t nb = bundles.size();
  const auto n_goods = static_cast<std::size_t>(bundles.n_goods());
  const auto& vars = state.fractional;

  lp::LinearProgram ulip(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v) ulip.set_objective(v, c[var_index(vars[v].agent, vars[v].bundle, nb)]);

  std::vector<std::vector<lp::Term>> demand(problem.n_agents);
  std::vector<std::vector<lp::Term>> supply(n_goods);
  for (std::size_t v = 0; v < vars.size(); ++v) {
    demand[vars[v].agent].push_back({v, 1.0});
    const Bundle& b = bundles[vars[v].bundle];
    for (std::size_t j = 0; j < n_goods; ++j) {
      if (b[j] != 0 && state.active_goods[j]) supply[j].push_back({v, static_cast<double>(b[j])});
    }
  }
  for (std::size_t i = 0; i < problem.n_agents; ++i) {
    if (demand[i].empty()) continue;
    const double rhs = std::max(0.0, 1.0 - fixed_demand[i]);
    const auto rel = state.tight_agents[i] ? lp::Relation::Equal : lp::Relation::LessEqual;
    ulip.add_row(std::move(demand[i]), rel, rhs);
  }
  for (std::size_t j = 0; j < n_goods; ++j) {
    if (supply[j].empty()) continue;
    ulip.add_row(std::move(supply[j]), lp::Relation::LessEqual, std::max(0.0, state.residual_supplies[j]));
  }

  const lp::Solution sol = lp::solve(ulip);
  if (!sol.optimal()) {
    throw RoundingStall(std::string("restricted LP is ") + lp::to_string(sol.status) + " at iteration " +
                        std::to_string(state.tau));
  }
  return sol.primal;
}

bool is_integral(double v) { return v <= kIntegralityTol || v >= 1.0 - kIntegralityTol; }

}  // namespace

Allocation iterative_rounding(std::span<const double> z, std::span<const double> c, const RoundingProblem& problem,
                              RoundingTrace* trace) {
  if (problem.bundles == nullptr) throw InvalidConfig("rounding problem has no bundle space");
  const BundleSpace& bundles = *problem.bundles;
  const std::size_t nb = bundles.size();
  const auto n_goods = static_cast<std::size_t>(bundles.n_goods());
  const std::size_t n_vars = problem.n_agents * nb;
  if (z.size() != n_vars || c.size() != n_vars) throw InvalidConfig("point and reward must cover every (agent, bundle)");
  if (problem.supplies.size() != n_goods) throw InvalidConfig("supply vector size mismatch");

  RoundingState state;
  state.active_goods.assign(n_goods, 1);
  state.residual_supplies = problem.supplies;
  state.tight_agents.assign(problem.n_agents, 0);
  state.fixed = Allocation(problem.n_agents);
  std::vector<double> fixed_demand(problem.n_agents, 0.0);

  std::vector<FractionalVar> pending;
  for (std::size_t i = 0; i < problem.n_agents; ++i) {
    double row = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      const double v = z[var_index(i, b, nb)];
      if (v < -kIntegralityTol) throw InvalidConfig("input point has a negative coordinate");
      row += v;
      if (v > kIntegralityTol) pending.push_back({i, b, v});
    }
    state.tight_agents[i] = std::abs(row - 1.0) <= kTightDemandTol;
  }

  const std::size_t iteration_cap = pending.size() + n_goods + 2;
  RoundingTrace local;
  RoundingTrace& tr = trace ? *trace : local;
  tr = RoundingTrace{};

  for (;;) {
    state.fractional.clear();
    for (const FractionalVar& v : pending) {
      if (v.value <= kIntegralityTol) continue;
      if (v.value >= 1.0 - kIntegralityTol) {
        if (state.fixed.assigned(v.agent)) throw RoundingStall("agent fixed to two bundles");
        state.fixed.bundle_of[v.agent] = static_cast<std::int32_t>(v.bundle);
        fixed_demand[v.agent] += 1.0;
        const Bundle& b = bundles[v.bundle];
        for (std::size_t j = 0; j < n_goods; ++j) state.residual_supplies[j] -= b[j];
        continue;
      }
      state.fractional.push_back(v);
    }
    tr.progress.push_back(state.fractional.size() + state.active_count());
    if (state.fractional.empty()) break;
    if (state.tau >= iteration_cap) throw RoundingStall("iteration cap exceeded");

    const std::vector<double> values = solve_restricted(state, c, fixed_demand, problem);
    ++tr.lp_solves;
    bool any_integral = false;
    for (std::size_t v = 0; v < values.size(); ++v) {
      state.fractional[v].value = values[v];
      any_integral |= is_integral(values[v]);
    }
    if (!any_integral) {
      state.active_goods = drop_rule(state, bundles, problem.k);
      ++tr.drops;
    }
    pending = state.fractional;
    ++state.tau;
  }
  tr.iterations = state.tau;
  return state.fixed;
}

}  // namespace popt
