#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "popt/errors.hpp"
#include "popt/lottery.hpp"
#include "popt/oracle.hpp"

using namespace popt;

namespace {

AuctionInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> agents(1, 4), goods(1, 3), supply(1, 3), kd(1, 2);
  std::vector<int> s(static_cast<std::size_t>(goods(rng)));
  for (int& v : s) v = supply(rng);
  AuctionInstance inst = AuctionInstance::make(agents(rng), static_cast<int>(s.size()), kd(rng), s);
  std::uniform_real_distribution<double> value(0.0, 10.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (double& v : inst.valuations) v = unit(rng) < 0.3 ? 0.0 : value(rng);
  return inst;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

TEST_CASE("integral optimum gives a one-point lottery") {
  AuctionInstance inst = AuctionInstance::make(2, 1, 1, {1});
  inst.value(0, 0) = 2.0;
  inst.value(1, 0) = 1.0;
  const PerturbedInstance ctx = PerturbedInstance::unperturbed(inst);
  const lp::Solution lip = lp::solve(build_lip(ctx));
  REQUIRE(lip.optimal());
  const Lottery lottery = construct_lottery(lip.primal, ctx, MechanismConfig{});
  REQUIRE(lottery.size() == 1);
  CHECK(lottery.weights[0] == 1.0);
  CHECK(lottery.points[0].bundle_of == std::vector<std::int32_t>{0, Allocation::kUnassigned});
  CHECK(lottery.residual <= 1e-9);

  const MlipReport report = verify_mlip_optimality(lottery.points[0], ctx, lip.primal, lip);
  CHECK(report.resolved);
  CHECK(report.point_objective == doctest::Approx(2.0));
  CHECK(report.mlip_objective == doctest::Approx(2.0));
}

TEST_CASE("two identical agents split one unit evenly") {
  AuctionInstance inst = AuctionInstance::make(2, 1, 1, {1});
  inst.value(0, 0) = 1.0;
  inst.value(1, 0) = 1.0;
  MechanismConfig cfg;
  cfg.delta_w = 0.0;
  Rng rng(3);
  const PerturbedInstance ctx = perturb(inst, cfg, rng);
  const double cap = ctx.perturbed_supplies[0];
  // An optimal but non-vertex LP solution, supplied by hand.
  const std::vector<double> x_star{cap / 2.0, cap / 2.0};

  const Lottery lottery = construct_lottery(x_star, ctx, cfg);
  CHECK(lottery.residual < cfg.epsilon);
  double to_first = 0.0, to_second = 0.0, to_nobody = 0.0;
  for (std::size_t t = 0; t < lottery.size(); ++t) {
    const auto& p = lottery.points[t];
    CHECK_FALSE((p.assigned(0) && p.assigned(1)));
    if (p.assigned(0)) {
      to_first += lottery.weights[t];
    } else if (p.assigned(1)) {
      to_second += lottery.weights[t];
    } else {
      to_nobody += lottery.weights[t];
    }
  }
  CHECK(std::abs(to_first - cap / 2.0) <= 1e-6);
  CHECK(std::abs(to_second - cap / 2.0) <= 1e-6);
  CHECK(std::abs(to_nobody - (1.0 - cap)) <= 1e-6);
  const auto expected = lottery.expectation(1);
  CHECK(std::abs(expected[0] - x_star[0]) <= 1e-6);
  CHECK(std::abs(expected[1] - x_star[1]) <= 1e-6);

  // Duals of the solver's (vertex) optimum certify every point as well.
  const lp::Solution lip = lp::solve(build_lip(ctx));
  REQUIRE(lip.optimal());
  for (const Allocation& p : lottery.points) CHECK_NOTHROW(verify_mlip_optimality(p, ctx, x_star, lip));
}

TEST_CASE("random instances: lottery properties and modified-LP optimality") {
  std::mt19937_64 gen(8080);
  int fractional = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const AuctionInstance inst = random_instance(gen);
    MechanismConfig cfg;
    Rng rng(static_cast<std::uint64_t>(trial));
    const PerturbedInstance ctx = perturb(inst, cfg, rng);
    const lp::Solution lip = lp::solve(build_lip(ctx));
    REQUIRE(lip.optimal());
    CAPTURE(trial);

    const Lottery lottery = construct_lottery(lip.primal, ctx, cfg);
    fractional += lottery.size() > 1;
    REQUIRE(lottery.size() == lottery.weights.size());
    double total = 0.0;
    for (double w : lottery.weights) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t a = 0; a < lottery.size(); ++a) {
      for (std::size_t b = a + 1; b < lottery.size(); ++b) CHECK(lottery.points[a] != lottery.points[b]);
    }

    const std::size_t nb = inst.n_bundles();
    const std::vector<double> expected = lottery.expectation(nb);
    std::vector<double> diff(expected.size());
    for (std::size_t v = 0; v < diff.size(); ++v) diff[v] = expected[v] - std::max(0.0, lip.primal[v]);
    CHECK(norm(diff) <= cfg.epsilon + 1e-12);

    const std::vector<double> c = ctx.weighted_values();
    CHECK(dot(c, expected) >= dot(c, lip.primal) - cfg.epsilon * norm(c) - 1e-9);

    for (const Allocation& p : lottery.points) {
      CHECK(membership_violation(p, lip.primal, ctx).empty());
      const auto used = p.consumption(*inst.bundles);
      for (std::size_t j = 0; j < used.size(); ++j) CHECK(used[j] <= inst.supplies[j] + inst.k - 1);
      const MlipReport report = verify_mlip_optimality(p, ctx, lip.primal, lip);
      CHECK(report.mlip_objective == doctest::Approx(report.point_objective).epsilon(1e-6));
    }
  }
  CHECK(fractional > 0);
}

TEST_CASE("each lottery point is an integer optimum at its modified supplies") {
  std::mt19937_64 gen(606);
  for (int trial = 0; trial < 40; ++trial) {
    const AuctionInstance inst = random_instance(gen);
    MechanismConfig cfg;
    Rng rng(static_cast<std::uint64_t>(trial) + 1000);
    const PerturbedInstance ctx = perturb(inst, cfg, rng);
    const lp::Solution lip = lp::solve(build_lip(ctx));
    REQUIRE(lip.optimal());
    const Lottery lottery = construct_lottery(lip.primal, ctx, cfg);
    const std::vector<double> c = ctx.weighted_values();
    CAPTURE(trial);
    for (const Allocation& p : lottery.points) {
      const MlipReport report = verify_mlip_optimality(p, ctx, lip.primal, lip, false);
      const OracleResult best = ip_oracle(inst, c, report.supplies);
      CHECK(best.value == doctest::Approx(p.objective(c, inst.n_bundles())).epsilon(1e-9));
    }
  }
}

TEST_CASE("a hand-altered point fails verification") {
  AuctionInstance inst = AuctionInstance::make(2, 1, 1, {1});
  inst.value(0, 0) = 2.0;
  inst.value(1, 0) = 1.0;
  const PerturbedInstance ctx = PerturbedInstance::unperturbed(inst);
  const lp::Solution lip = lp::solve(build_lip(ctx));
  REQUIRE(lip.optimal());

  Allocation flipped(2);
  flipped.bundle_of[1] = 0;  // x* gives agent 1 nothing
  CHECK_FALSE(membership_violation(flipped, lip.primal, ctx).empty());
  CHECK_THROWS_AS(verify_mlip_optimality(flipped, ctx, lip.primal, lip), VerificationFailure);

  Allocation empty(2);  // agent 0's demand row is tight in x*
  CHECK(membership_violation(empty, lip.primal, ctx).find("tight") != std::string::npos);
  CHECK_THROWS_AS(verify_mlip_optimality(empty, ctx, lip.primal, lip), VerificationFailure);
}

TEST_CASE("over-allocation beyond s + k - 1 is flagged") {
  AuctionInstance inst = AuctionInstance::make(3, 1, 1, {1});
  for (std::size_t i = 0; i < 3; ++i) inst.value(i, 0) = 1.0;
  const PerturbedInstance ctx = PerturbedInstance::unperturbed(inst);
  const std::vector<double> x_star{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  Allocation two(3);
  two.bundle_of = {0, 0, Allocation::kUnassigned};
  CHECK(membership_violation(two, x_star, ctx).find("s + k - 1") != std::string::npos);
}

TEST_CASE("sampling frequencies follow the weights") {
  Lottery lottery;
  lottery.points = {Allocation(1), Allocation(1), Allocation(1)};
  lottery.weights = {0.2, 0.3, 0.5};
  Rng rng(99);
  const int draws = 10000;
  std::vector<int> hits(3, 0);
  for (int d = 0; d < draws; ++d) ++hits[sample_index(lottery, rng)];
  for (std::size_t t = 0; t < 3; ++t) {
    const double p = lottery.weights[t];
    const double sigma = std::sqrt(draws * p * (1.0 - p));
    CHECK(std::abs(hits[t] - draws * p) <= 3.0 * sigma);
  }

  Lottery halves;
  halves.points = {Allocation(1), Allocation(1)};
  halves.weights = {0.5, 0.5};
  int first = 0;
  for (int d = 0; d < draws; ++d) first += sample_index(halves, rng) == 0;
  CHECK(std::abs(first - draws / 2) <= 3.0 * std::sqrt(draws * 0.25));

  Lottery degenerate;
  degenerate.points = {Allocation(1), Allocation(1)};
  degenerate.weights = {1.0, 0.0};
  for (int d = 0; d < 100; ++d) CHECK(sample_index(degenerate, rng) == 0);

  Lottery single;
  single.points = {Allocation(2)};
  single.weights = {1.0};
  for (int d = 0; d < 20; ++d) CHECK(sample_index(single, rng) == 0);
  CHECK_THROWS_AS(sample_index(Lottery{}, rng), InvalidConfig);
}

TEST_CASE("perturbation step uses the bundle-space second moment") {
  const AuctionInstance inst = AuctionInstance::make(4, 3, 2, {2, 2, 2});
  const PerturbedInstance ctx = PerturbedInstance::unperturbed(inst);
  // sum_B B_0^2 = 7 for three goods and k = 2
  CHECK(perturbation_step(ctx, 1e-3) == doctest::Approx(1e-3 / std::sqrt(4.0 * 7.0)));
}
