#include "popt/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popt/errors.hpp"

namespace popt {

bool MechanismResult::all_passed() const {
  return std::all_of(reports.begin(), reports.end(),
                     [](const VerificationReport& r) { return r.supporting_pass && r.envy_pass; });
}

MechanismResult run_mechanism(const AuctionInstance& instance, const MechanismConfig& cfg, Rng& rng,
                              const MechanismOptions& options) {
  instance.validate();
  cfg.validate();

  MechanismResult out;
  out.perturbed = perturb(instance, cfg, rng);
  const lp::LinearProgram lip = build_lip(out.perturbed);
  out.lip = lp::solve(lip);
  if (!out.lip.optimal()) {
    throw NumericalFailure(std::string("weighted LP is ") + lp::to_string(out.lip.status));
  }
  out.lp_objective = out.lip.objective_value;

  out.lottery = construct_lottery(out.lip.primal, out.perturbed, cfg, options.lottery);
  out.prices = popt_prices(out.lip, instance);
  out.epsilon_u = effective_epsilon_u(cfg, instance);

  const std::vector<double>& reward = lip.objective();
  const std::size_t nb = instance.n_bundles();
  double norm = 0.0;
  for (double c : reward) norm += c * c;
  norm = std::sqrt(norm);
  for (std::size_t t = 0; t < out.lottery.size(); ++t) {
    out.expected_objective += out.lottery.weights[t] * out.lottery.points[t].objective(reward, nb);
  }
  if (std::abs(out.expected_objective - out.lp_objective) > cfg.epsilon * norm + 1e-9 * (1.0 + out.lp_objective)) {
    throw VerificationFailure("expected lottery objective " + std::to_string(out.expected_objective) +
                              " differs from the LP optimum " + std::to_string(out.lp_objective));
  }

  const bool resolve = instance.num_variables() <= options.mlip_resolve_limit;
  for (const Allocation& point : out.lottery.points) {
    if (options.verify_mlip) {
      out.mlip.push_back(verify_mlip_optimality(point, out.perturbed, out.lip.primal, out.lip, resolve));
    }
    out.reports.push_back(verify_prices(point, out.prices, instance, out.epsilon_u, out.epsilon_u));
  }
  out.sampled = sample_index(out.lottery, rng);
  return out;
}

}  // namespace popt
