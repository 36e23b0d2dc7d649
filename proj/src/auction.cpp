#include "popt/auction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "popt/errors.hpp"

namespace popt {

int Bundle::size() const { return std::accumulate(counts.begin(), counts.end(), 0); }

std::size_t k_bundle_count(int n_goods, int k) {
  if (n_goods < 1 || k < 1) return 0;
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  unsigned __int128 total = 0;
  for (int m = 1; m <= k; ++m) {
    unsigned __int128 c = 1;
    for (int i = 1; i <= m; ++i) {
      c = c * static_cast<unsigned>(n_goods - 1 + i) / static_cast<unsigned>(i);
      if (c > kMax) return kMax;
    }
    total += c;
    if (total > kMax) return kMax;
  }
  return static_cast<std::size_t>(total);
}

namespace {

void fill_compositions(int remaining, std::size_t good, std::vector<int>& counts, std::vector<Bundle>& out) {
  if (good + 1 == counts.size()) {
    counts[good] = remaining;
    out.push_back(Bundle{counts});
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    counts[good] = c;
    fill_compositions(remaining - c, good + 1, counts, out);
  }
  counts[good] = 0;
}

}  // namespace

std::vector<Bundle> enumerate_k_bundles(int n_goods, int k, std::size_t cap) {
  if (n_goods < 1) throw InvalidConfig("n_goods must be >= 1");
  if (k < 1) throw InvalidConfig("k must be >= 1");
  const std::size_t count = k_bundle_count(n_goods, k);
  if (count > cap) {
    throw BundleSpaceOverflow("k-bundle space has " + std::to_string(count) + " bundles, cap is " + std::to_string(cap));
  }
  std::vector<Bundle> out;
  out.reserve(count);
  std::vector<int> counts(static_cast<std::size_t>(n_goods), 0);
  for (int size = 1; size <= k; ++size) fill_compositions(size, 0, counts, out);
  return out;
}

BundleSpace::BundleSpace(int n_goods, int k, std::size_t cap)
    : n_goods_(n_goods), k_(k), bundles_(enumerate_k_bundles(n_goods, k, cap)) {
  for (std::size_t b = 0; b < bundles_.size(); ++b) index_.emplace(bundles_[b].counts, b);
}

std::optional<std::size_t> BundleSpace::index_of(const Bundle& bundle) const {
  auto it = index_.find(bundle.counts);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double BundleSpace::sum_of_squares(int good) const {
  double s = 0.0;
  for (const Bundle& b : bundles_) s += static_cast<double>(b[static_cast<std::size_t>(good)]) * b[static_cast<std::size_t>(good)];
  return s;
}

AuctionInstance AuctionInstance::make(int n_agents, int n_goods, int k, std::vector<int> supplies) {
  AuctionInstance inst;
  inst.n_agents = n_agents;
  inst.n_goods = n_goods;
  inst.k = k;
  inst.supplies = std::move(supplies);
  inst.bundles = std::make_shared<const BundleSpace>(n_goods, k);
  inst.valuations.assign(inst.num_variables(), 0.0);
  return inst;
}

double AuctionInstance::max_value(std::size_t agent) const {
  double m = 0.0;
  for (std::size_t b = 0; b < n_bundles(); ++b) m = std::max(m, value(agent, b));
  return m;
}

double AuctionInstance::max_value() const {
  double m = 0.0;
  for (double v : valuations) m = std::max(m, v);
  return m;
}

void AuctionInstance::validate() const {
  if (n_agents < 0) throw InvalidConfig("n_agents must be >= 0");
  if (!bundles) throw InvalidConfig("bundle space missing");
  if (bundles->n_goods() != n_goods || bundles->k() != k) throw InvalidConfig("bundle space does not match (n_goods, k)");
  if (supplies.size() != static_cast<std::size_t>(n_goods)) throw InvalidConfig("one supply per good required");
  for (int s : supplies) {
    if (s <= 0) throw InvalidConfig("supplies must be positive integers");
  }
  if (valuations.size() != num_variables()) throw InvalidConfig("valuations must cover every (agent, bundle)");
  for (double v : valuations) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidConfig("valuations must be finite and >= 0");
  }
  if (!agent_types.empty()) {
    if (agent_types.size() != static_cast<std::size_t>(n_agents)) throw InvalidConfig("one type label per agent required");
    for (int t : agent_types) {
      if (t < 0) throw InvalidConfig("type labels must be >= 0");
    }
  }
}

void MechanismConfig::validate() const {
  if (!(delta_w >= 0.0 && delta_w < 1.0)) throw InvalidConfig("delta_w must lie in [0, 1)");
  if (!(delta_eps >= 0.0)) throw InvalidConfig("delta_eps must be >= 0");
  if (!(epsilon > 0.0)) throw InvalidConfig("epsilon must be > 0");
  if (epsilon_u && !(*epsilon_u >= 0.0)) throw InvalidConfig("epsilon_u must be >= 0");
}

double effective_epsilon_u(const MechanismConfig& cfg, const AuctionInstance& instance) {
  if (cfg.epsilon_u) return *cfg.epsilon_u;
  return 2.0 * cfg.delta_w * instance.max_value();
}

PerturbedInstance PerturbedInstance::unperturbed(AuctionInstance instance) {
  PerturbedInstance p;
  p.weights.assign(instance.num_variables(), 1.0);
  p.perturbed_supplies.assign(instance.supplies.begin(), instance.supplies.end());
  p.base = std::move(instance);
  return p;
}

std::vector<double> PerturbedInstance::weighted_values() const {
  std::vector<double> c(base.valuations.size());
  for (std::size_t v = 0; v < c.size(); ++v) c[v] = weights[v] * base.valuations[v];
  return c;
}

PerturbedInstance perturb(const AuctionInstance& instance, const MechanismConfig& cfg, Rng& rng) {
  instance.validate();
  cfg.validate();
  const int min_supply = instance.supplies.empty() ? 1 : *std::min_element(instance.supplies.begin(), instance.supplies.end());
  if (!(2.0 * cfg.delta_eps < min_supply)) {
    throw InvalidConfig("delta_eps too large: perturbed supply s_j - eps_j must stay positive");
  }

  PerturbedInstance p;
  p.base = instance;
  const std::size_t nb = instance.n_bundles();
  const auto n_agents = static_cast<std::size_t>(instance.n_agents);
  std::uniform_real_distribution<double> weight_dist(1.0 - cfg.delta_w, 1.0 + cfg.delta_w);
  p.weights.assign(instance.num_variables(), 1.0);

  if (instance.agent_types.empty()) {
    if (cfg.delta_w > 0.0) {
      for (double& w : p.weights) w = weight_dist(rng);
    }
  } else {
    const int n_types = *std::max_element(instance.agent_types.begin(), instance.agent_types.end()) + 1;
    std::vector<double> per_type(static_cast<std::size_t>(n_types) * nb, 1.0);
    if (cfg.delta_w > 0.0) {
      for (double& w : per_type) w = weight_dist(rng);
    }
    for (std::size_t i = 0; i < n_agents; ++i) {
      const auto t = static_cast<std::size_t>(instance.agent_types[i]);
      std::copy_n(per_type.begin() + static_cast<std::ptrdiff_t>(t * nb), nb,
                  p.weights.begin() + static_cast<std::ptrdiff_t>(i * nb));
    }
  }

  p.perturbed_supplies.resize(instance.supplies.size());
  std::uniform_real_distribution<double> eps_dist(cfg.delta_eps, 2.0 * cfg.delta_eps);
  for (std::size_t j = 0; j < instance.supplies.size(); ++j) {
    const double eps = cfg.delta_eps > 0.0 ? eps_dist(rng) : 0.0;
    p.perturbed_supplies[j] = instance.supplies[j] - eps;
  }
  return p;
}

lp::LinearProgram build_lip(const PerturbedInstance& p) {
  return build_lip(p, p.perturbed_supplies);
}

lp::LinearProgram build_lip(const PerturbedInstance& p, std::span<const double> supplies) {
  const AuctionInstance& inst = p.base;
  const std::size_t nb = inst.n_bundles();
  const auto n_agents = static_cast<std::size_t>(inst.n_agents);
  const auto n_goods = static_cast<std::size_t>(inst.n_goods);
  if (supplies.size() != n_goods) throw InvalidConfig("supply vector size mismatch");

  lp::LinearProgram lp(inst.num_variables());
  for (std::size_t v = 0; v < inst.num_variables(); ++v) lp.set_objective(v, p.weights[v] * inst.valuations[v]);

  for (std::size_t i = 0; i < n_agents; ++i) {
    std::vector<lp::Term> terms;
    terms.reserve(nb);
    for (std::size_t b = 0; b < nb; ++b) terms.push_back({var_index(i, b, nb), 1.0});
    lp.add_row(std::move(terms), lp::Relation::LessEqual, 1.0);
  }
  std::vector<std::vector<lp::Term>> supply_terms(n_goods);
  for (std::size_t i = 0; i < n_agents; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      const Bundle& bundle = (*inst.bundles)[b];
      for (std::size_t j = 0; j < n_goods; ++j) {
        if (bundle[j] != 0) supply_terms[j].push_back({var_index(i, b, nb), static_cast<double>(bundle[j])});
      }
    }
  }
  for (std::size_t j = 0; j < n_goods; ++j) lp.add_row(std::move(supply_terms[j]), lp::Relation::LessEqual, supplies[j]);
  return lp;
}

std::vector<int> Allocation::consumption(const BundleSpace& bundles) const {
  std::vector<int> used(static_cast<std::size_t>(bundles.n_goods()), 0);
  for (std::int32_t b : bundle_of) {
    if (b == kUnassigned) continue;
    const Bundle& bundle = bundles[static_cast<std::size_t>(b)];
    for (std::size_t j = 0; j < used.size(); ++j) used[j] += bundle[j];
  }
  return used;
}

std::vector<double> Allocation::to_dense(std::size_t n_bundles) const {
  std::vector<double> x(bundle_of.size() * n_bundles, 0.0);
  for (std::size_t i = 0; i < bundle_of.size(); ++i) {
    if (bundle_of[i] != kUnassigned) x[var_index(i, static_cast<std::size_t>(bundle_of[i]), n_bundles)] = 1.0;
  }
  return x;
}

double Allocation::objective(std::span<const double> coefficients, std::size_t n_bundles) const {
  double s = 0.0;
  for (std::size_t i = 0; i < bundle_of.size(); ++i) {
    if (bundle_of[i] != kUnassigned) s += coefficients[var_index(i, static_cast<std::size_t>(bundle_of[i]), n_bundles)];
  }
  return s;
}

int total_overallocation(const Allocation& allocation, const AuctionInstance& instance) {
  const auto used = allocation.consumption(*instance.bundles);
  int total = 0;
  for (std::size_t j = 0; j < used.size(); ++j) total += std::max(0, used[j] - instance.supplies[j]);
  return total;
}

}  // namespace popt
