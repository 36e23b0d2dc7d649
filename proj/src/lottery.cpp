#include "popt/lottery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "popt/errors.hpp"
#include "popt/rounding.hpp"

namespace popt {

namespace {

// Coordinates of x* below this are treated as exact zeros.
constexpr double kZeroSnap = 1e-9;

struct Support {
  std::vector<std::size_t> vars;            // flat indices with x* > 0
  std::vector<std::ptrdiff_t> position;     // flat index -> position in vars, or -1
  std::vector<double> values;               // x* restricted to vars
};

Support make_support(std::span<const double> x_star) {
  Support s;
  s.position.assign(x_star.size(), -1);
  for (std::size_t v = 0; v < x_star.size(); ++v) {
    if (x_star[v] > kZeroSnap) {
      s.position[v] = static_cast<std::ptrdiff_t>(s.vars.size());
      s.vars.push_back(v);
      s.values.push_back(x_star[v]);
    }
  }
  return s;
}

std::vector<double> restrict_to(const Allocation& point, const Support& support, std::size_t nb) {
  std::vector<double> out(support.vars.size(), 0.0);
  for (std::size_t i = 0; i < point.n_agents(); ++i) {
    if (!point.assigned(i)) continue;
    const auto pos = support.position[var_index(i, static_cast<std::size_t>(point.bundle_of[i]), nb)];
    if (pos < 0) throw VerificationFailure("lottery point uses a coordinate where x* is zero");
    out[static_cast<std::size_t>(pos)] = 1.0;
  }
  return out;
}

std::vector<double> agent_demand(std::span<const double> x, std::size_t n_agents, std::size_t nb) {
  std::vector<double> demand(n_agents, 0.0);
  for (std::size_t i = 0; i < n_agents; ++i) {
    for (std::size_t b = 0; b < nb; ++b) demand[i] += x[var_index(i, b, nb)];
  }
  return demand;
}

bool is_integral_point(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(),
                      [](double v) { return std::abs(v) <= kIntegralityTol || std::abs(v - 1.0) <= kIntegralityTol; });
}

Allocation snap(std::span<const double> x, std::size_t n_agents, std::size_t nb) {
  Allocation out(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      if (x[var_index(i, b, nb)] >= 1.0 - kIntegralityTol) out.bundle_of[i] = static_cast<std::int32_t>(b);
    }
  }
  return out;
}

double residual_norm(std::span<const double> x_star, const Support& support, const std::vector<double>& y_support) {
  double sq = 0.0;
  for (std::size_t v = 0; v < x_star.size(); ++v) {
    const auto pos = support.position[v];
    const double y = pos < 0 ? 0.0 : y_support[static_cast<std::size_t>(pos)];
    const double d = y - std::max(0.0, x_star[v]);
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace

std::vector<double> Lottery::expectation(std::size_t n_bundles) const {
  if (points.empty()) return {};
  std::vector<double> out(points.front().n_agents() * n_bundles, 0.0);
  for (std::size_t t = 0; t < points.size(); ++t) {
    const Allocation& p = points[t];
    for (std::size_t i = 0; i < p.n_agents(); ++i) {
      if (p.assigned(i)) out[var_index(i, static_cast<std::size_t>(p.bundle_of[i]), n_bundles)] += weights[t];
    }
  }
  return out;
}

double perturbation_step(const PerturbedInstance& ctx, double delta_eps) {
  const BundleSpace& bundles = *ctx.base.bundles;
  const double n = static_cast<double>(ctx.base.n_agents);
  const double step = delta_eps / std::sqrt(n * bundles.sum_of_squares(0));
  if (bundles.n_goods() > 1) {
    const double other = delta_eps / std::sqrt(n * bundles.sum_of_squares(1));
    if (std::abs(other - step) > 1e-12 * std::abs(step)) {
      throw VerificationFailure("perturbation step differs between goods 0 and 1");
    }
  }
  return step;
}

std::string membership_violation(const Allocation& point, std::span<const double> x_star, const PerturbedInstance& ctx) {
  const AuctionInstance& inst = ctx.base;
  const std::size_t nb = inst.n_bundles();
  const auto n_agents = static_cast<std::size_t>(inst.n_agents);
  if (point.n_agents() != n_agents) return "point has the wrong number of agents";
  const std::vector<double> demand = agent_demand(x_star, n_agents, nb);
  for (std::size_t i = 0; i < n_agents; ++i) {
    if (point.assigned(i)) {
      const auto b = static_cast<std::size_t>(point.bundle_of[i]);
      if (b >= nb) return "agent " + std::to_string(i) + " holds an unknown bundle";
      if (x_star[var_index(i, b, nb)] <= kZeroSnap) {
        return "agent " + std::to_string(i) + " receives a bundle with zero weight in x*";
      }
    } else if (std::abs(demand[i] - 1.0) <= kTightDemandTol) {
      return "agent " + std::to_string(i) + " has a tight demand row in x* but is unassigned";
    }
  }
  const std::vector<int> used = point.consumption(*inst.bundles);
  for (std::size_t j = 0; j < used.size(); ++j) {
    if (used[j] > inst.supplies[j] + inst.k - 1) {
      return "good " + std::to_string(j) + " is allocated " + std::to_string(used[j]) + " units, above s + k - 1";
    }
  }
  return {};
}

Lottery construct_lottery(std::span<const double> x_star, const PerturbedInstance& ctx, const MechanismConfig& cfg,
                          const LotteryOptions& options) {
  const AuctionInstance& inst = ctx.base;
  const std::size_t nb = inst.n_bundles();
  const auto n_agents = static_cast<std::size_t>(inst.n_agents);
  const auto n_goods = static_cast<std::size_t>(inst.n_goods);
  if (x_star.size() != inst.num_variables()) throw InvalidConfig("x* must cover every (agent, bundle)");

  Lottery lottery;
  if (is_integral_point(x_star)) {
    lottery.points.push_back(snap(x_star, n_agents, nb));
    lottery.weights.push_back(1.0);
    const std::vector<double> dense = lottery.points.front().to_dense(nb);
    double sq = 0.0;
    for (std::size_t v = 0; v < dense.size(); ++v) sq += (dense[v] - x_star[v]) * (dense[v] - x_star[v]);
    lottery.residual = std::sqrt(sq);
    return lottery;
  }

  std::vector<double> x_clean(x_star.begin(), x_star.end());
  for (double& v : x_clean) {
    if (v <= kZeroSnap) v = 0.0;
  }
  const Support support = make_support(x_clean);
  const std::vector<double> demand = agent_demand(x_clean, n_agents, nb);
  std::vector<char> tight(n_agents, 0);
  for (std::size_t i = 0; i < n_agents; ++i) tight[i] = std::abs(demand[i] - 1.0) <= kTightDemandTol;

  const std::vector<double> reward = ctx.weighted_values();
  std::vector<double> negated(reward.size());
  std::transform(reward.begin(), reward.end(), negated.begin(), [](double c) { return -c; });

  const RoundingProblem initial_problem = RoundingProblem::from(ctx);
  const RoundingProblem step_problem = RoundingProblem::with_base_supplies(ctx);
  const double step_size = perturbation_step(ctx, cfg.delta_eps);

  std::vector<Allocation> points;
  std::vector<std::vector<double>> coords;
  auto add_point = [&](Allocation point) {
    if (std::find(points.begin(), points.end(), point) != points.end()) return false;
    if (const std::string why = membership_violation(point, x_clean, ctx); !why.empty()) {
      throw VerificationFailure("lottery point outside the admissible set: " + why);
    }
    coords.push_back(restrict_to(point, support, nb));
    points.push_back(std::move(point));
    return true;
  };
  add_point(iterative_rounding(x_clean, reward, initial_problem));
  add_point(iterative_rounding(x_clean, negated, initial_problem));

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_at = 0;
  std::vector<double> z(x_clean.size(), 0.0);
  std::vector<double> direction_full(x_clean.size(), 0.0);

  for (std::size_t iter = 0;; ++iter) {
    if (iter >= options.max_iterations) throw LotteryDivergence("lottery construction hit the iteration cap");
    const HullProjection proj = nearest_point_in_hull(coords, support.values);
    const double residual = residual_norm(x_clean, support, proj.y_star);

    if (residual < cfg.epsilon) {
      double total = 0.0;
      for (std::size_t t = 0; t < points.size(); ++t) {
        if (proj.lambdas[t] > 0.0) {
          lottery.points.push_back(points[t]);
          lottery.weights.push_back(proj.lambdas[t]);
          total += proj.lambdas[t];
        }
      }
      for (double& w : lottery.weights) w /= total;
      lottery.residual = residual;
      lottery.iterations = iter;
      return lottery;
    }
    if (residual < best * (1.0 - 1e-12)) {
      best = residual;
      best_at = iter;
    } else if (iter - best_at >= options.divergence_window) {
      throw LotteryDivergence("lottery residual " + std::to_string(best) + " has not decreased in " +
                              std::to_string(options.divergence_window) + " iterations");
    }

    // Keep the minimal face carrying y*.
    std::vector<Allocation> kept_points;
    std::vector<std::vector<double>> kept_coords;
    for (std::size_t t = 0; t < points.size(); ++t) {
      if (proj.lambdas[t] > kSupportWeightTol) {
        kept_points.push_back(std::move(points[t]));
        kept_coords.push_back(std::move(coords[t]));
      }
    }
    points = std::move(kept_points);
    coords = std::move(kept_coords);

    // Unit direction x* - y* on the support.
    std::vector<double> direction(support.vars.size());
    double norm = 0.0;
    for (std::size_t a = 0; a < direction.size(); ++a) {
      direction[a] = support.values[a] - proj.y_star[a];
      norm += direction[a] * direction[a];
    }
    norm = std::sqrt(norm);
    for (double& d : direction) d /= norm;

    // Shrink the step where it would leave the non-negative orthant or
    // overrun a slack demand row.
    double step = step_size;
    for (std::size_t a = 0; a < direction.size(); ++a) {
      if (direction[a] < 0.0) step = std::min(step, support.values[a] / -direction[a]);
    }
    std::vector<double> demand_shift(n_agents, 0.0);
    for (std::size_t a = 0; a < direction.size(); ++a) demand_shift[support.vars[a] / nb] += direction[a];
    for (std::size_t i = 0; i < n_agents; ++i) {
      if (!tight[i] && demand_shift[i] > 0.0) step = std::min(step, std::max(0.0, 1.0 - demand[i]) / demand_shift[i]);
    }

    std::fill(z.begin(), z.end(), 0.0);
    std::fill(direction_full.begin(), direction_full.end(), 0.0);
    for (std::size_t a = 0; a < direction.size(); ++a) {
      z[support.vars[a]] = std::max(0.0, support.values[a] + step * direction[a]);
      direction_full[support.vars[a]] = direction[a];
    }
    std::vector<double> used(n_goods, 0.0);
    for (std::size_t a = 0; a < direction.size(); ++a) {
      const Bundle& b = (*inst.bundles)[support.vars[a] % nb];
      for (std::size_t j = 0; j < n_goods; ++j) used[j] += b[j] * z[support.vars[a]];
    }
    for (std::size_t j = 0; j < n_goods; ++j) {
      if (used[j] > inst.supplies[j] + 1e-9) {
        throw VerificationFailure("perturbed point exceeds the supply of good " + std::to_string(j));
      }
    }

    add_point(iterative_rounding(z, direction_full, step_problem));
    lottery.iterations = iter + 1;
  }
}

std::size_t sample_index(const Lottery& lottery, Rng& rng) {
  if (lottery.points.empty()) throw InvalidConfig("cannot sample an empty lottery");
  std::discrete_distribution<std::size_t> pick(lottery.weights.begin(), lottery.weights.end());
  return pick(rng);
}

MlipReport verify_mlip_optimality(const Allocation& point, const PerturbedInstance& ctx, std::span<const double> x_star,
                                  const lp::Solution& lip, bool resolve) {
  const AuctionInstance& inst = ctx.base;
  const std::size_t nb = inst.n_bundles();
  const auto n_agents = static_cast<std::size_t>(inst.n_agents);
  const auto n_goods = static_cast<std::size_t>(inst.n_goods);
  if (lip.duals.size() != n_agents + n_goods) throw InvalidConfig("LIP duals have the wrong size");

  if (const std::string why = membership_violation(point, x_star, ctx); !why.empty()) {
    throw VerificationFailure(why);
  }

  const std::vector<int> used = point.consumption(*inst.bundles);
  std::vector<double> star_used(n_goods, 0.0);
  for (std::size_t i = 0; i < n_agents; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      const double v = x_star[var_index(i, b, nb)];
      if (v == 0.0) continue;
      const Bundle& bundle = (*inst.bundles)[b];
      for (std::size_t j = 0; j < n_goods; ++j) star_used[j] += bundle[j] * v;
    }
  }

  MlipReport report;
  report.supplies.resize(n_goods);
  for (std::size_t j = 0; j < n_goods; ++j) {
    const double cap = ctx.perturbed_supplies[j];
    const bool slack = star_used[j] < cap - kTightDemandTol;
    report.supplies[j] = (slack && used[j] <= cap) ? cap : static_cast<double>(used[j]);
    if (report.supplies[j] > inst.supplies[j] + inst.k - 1 + 1e-9) {
      throw VerificationFailure("modified supply of good " + std::to_string(j) + " exceeds s + k - 1");
    }
  }

  const lp::LinearProgram mlip = build_lip(ctx, report.supplies);
  lp::Solution candidate;
  candidate.status = lp::Status::Optimal;
  candidate.primal = point.to_dense(nb);
  candidate.duals = lip.duals;
  report.point_objective = point.objective(mlip.objective(), nb);
  const double scale = 1.0 + std::abs(report.point_objective);

  if (lp::primal_residual(mlip, candidate.primal) > 1e-9) {
    throw VerificationFailure("point is infeasible for the modified LP");
  }
  if (lp::dual_residual(mlip, lip.duals) > 1e-7 * scale) {
    throw VerificationFailure("LIP duals are infeasible for the modified LP");
  }
  report.cs_residual = lp::complementary_slackness_residual(mlip, candidate);
  if (report.cs_residual > 1e-7 * scale) {
    throw VerificationFailure("complementary slackness fails between the LIP duals and the point (residual " +
                              std::to_string(report.cs_residual) + ")");
  }

  if (resolve) {
    const lp::Solution sol = lp::solve(mlip);
    if (!sol.optimal()) throw VerificationFailure("modified LP did not solve to optimality");
    report.mlip_objective = sol.objective_value;
    report.resolved = true;
    if (std::abs(sol.objective_value - report.point_objective) > 1e-6 * scale) {
      throw VerificationFailure("point objective " + std::to_string(report.point_objective) +
                                " differs from the modified LP optimum " + std::to_string(sol.objective_value));
    }
  }
  return report;
}

}  // namespace popt
