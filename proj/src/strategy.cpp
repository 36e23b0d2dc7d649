#include "popt/strategy.hpp"

#include <cmath>

#include "popt/errors.hpp"

namespace popt {

void TypedPopulation::validate() const {
  if (type_values.empty()) throw InvalidConfig("population needs at least one type");
  const std::size_t nb = k_bundle_count(n_goods, k);
  for (const auto& values : type_values) {
    if (values.size() != nb) throw InvalidConfig("type utilities must cover the bundle space");
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidConfig("type utilities must be finite and >= 0");
    }
  }
  if (supplies.size() != static_cast<std::size_t>(n_goods)) throw InvalidConfig("supply vector size mismatch");
}

AuctionInstance TypedPopulation::instantiate(std::size_t per_type, int deviator_type, int reported) const {
  validate();
  const std::size_t types = n_types();
  if (deviator_type < 0 || static_cast<std::size_t>(deviator_type) >= types || reported < 0 ||
      static_cast<std::size_t>(reported) >= types) {
    throw InvalidConfig("type index out of range");
  }
  AuctionInstance inst = AuctionInstance::make(static_cast<int>(per_type * types), n_goods, k, supplies);
  inst.agent_types.resize(per_type * types);
  const std::size_t nb = inst.n_bundles();
  for (std::size_t t = 0; t < types; ++t) {
    for (std::size_t c = 0; c < per_type; ++c) {
      const std::size_t agent = t * per_type + c;
      const bool deviates = t == static_cast<std::size_t>(deviator_type) && c == 0;
      const std::size_t label = deviates ? static_cast<std::size_t>(reported) : t;
      inst.agent_types[agent] = static_cast<int>(label);
      for (std::size_t b = 0; b < nb; ++b) inst.value(agent, b) = type_values[label][b];
    }
  }
  return inst;
}

double reporter_share_payoff(const MechanismResult& result, const AuctionInstance& reported_instance,
                             const TypedPopulation& pop, int true_type, int reported) {
  const BundleSpace& bundles = *reported_instance.bundles;
  const auto& truth = pop.type_values.at(static_cast<std::size_t>(true_type));
  double total = 0.0;
  std::size_t holders = 0;
  for (std::size_t i = 0; i < reported_instance.agent_types.size(); ++i) {
    if (reported_instance.agent_types[i] != reported) continue;
    ++holders;
    for (std::size_t t = 0; t < result.lottery.size(); ++t) {
      const Allocation& point = result.lottery.points[t];
      if (!point.assigned(i)) continue;
      const auto b = static_cast<std::size_t>(point.bundle_of[i]);
      total += result.lottery.weights[t] * (truth[b] - bundle_price(bundles[b], result.prices));
    }
  }
  if (holders == 0) throw InvalidConfig("no agent reports the requested type");
  return total / static_cast<double>(holders);
}

MisreportEstimate misreport_gain(const TypedPopulation& pop, std::size_t per_type, int true_type, int reported,
                                 const MechanismConfig& cfg, Rng& rng, std::size_t replications) {
  if (replications < 1) throw InvalidConfig("replications must be >= 1");
  if (per_type < 1) throw InvalidConfig("population scale must be >= 1");
  const AuctionInstance truthful = pop.instantiate(per_type);
  const AuctionInstance lying = pop.instantiate(per_type, true_type, reported);

  MisreportEstimate est;
  est.replications = replications;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t r = 0; r < replications; ++r) {
    const std::uint64_t seed = rng();
    MechanismConfig run_cfg = cfg;
    run_cfg.rng_seed = seed;

    Rng honest_rng(seed);
    const MechanismResult honest = run_mechanism(truthful, run_cfg, honest_rng);
    const double honest_payoff = reporter_share_payoff(honest, truthful, pop, true_type, true_type);

    Rng lying_rng(seed);
    const MechanismResult lie = run_mechanism(lying, run_cfg, lying_rng);
    const double lie_payoff = reporter_share_payoff(lie, lying, pop, true_type, reported);

    const double diff = lie_payoff - honest_payoff;
    est.truthful += honest_payoff;
    est.misreport += lie_payoff;
    sum += diff;
    sum_sq += diff * diff;
  }
  const double n = static_cast<double>(replications);
  est.truthful /= n;
  est.misreport /= n;
  est.gain = sum / n;
  if (replications > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.gain * est.gain) / (n - 1.0));
    est.half_width = 1.96 * std::sqrt(var / n);
  }
  return est;
}

}  // namespace popt
