#include "doctest.h"

#include <random>
#include <vector>

#include "popt/errors.hpp"
#include "popt/lottery.hpp"
#include "popt/pricing.hpp"

using namespace popt;

namespace {

// Two agents, one unit of one good, values 2 and 1.
AuctionInstance two_bidders() {
  AuctionInstance inst = AuctionInstance::make(2, 1, 1, {1});
  inst.value(0, 0) = 2.0;
  inst.value(1, 0) = 1.0;
  return inst;
}

Allocation holding(std::vector<std::int32_t> bundles) {
  Allocation a(bundles.size());
  a.bundle_of = std::move(bundles);
  return a;
}

}  // namespace

TEST_CASE("prices read the supply-row duals") {
  lp::Solution sol;
  sol.status = lp::Status::Optimal;
  sol.duals = {1.0, 0.0, 1.0};
  const AuctionInstance inst = two_bidders();
  CHECK(popt_prices(sol, inst).prices == std::vector<double>{1.0});

  sol.duals = {2.0, 1.0, -0.5};
  CHECK(popt_prices(sol, inst).prices == std::vector<double>{0.0});

  sol.duals = {1.0};
  CHECK_THROWS_AS(popt_prices(sol, inst), InvalidConfig);
}

TEST_CASE("solver dual for two bidders lies between the two values") {
  const AuctionInstance inst = two_bidders();
  const lp::Solution sol = lp::solve(build_lip(PerturbedInstance::unperturbed(inst)));
  REQUIRE(sol.optimal());
  const PriceVector p = popt_prices(sol, inst);
  CHECK(p[0] >= 1.0 - 1e-9);
  CHECK(p[0] <= 2.0 + 1e-9);
}

TEST_CASE("a good with spare supply is free") {
  AuctionInstance inst = AuctionInstance::make(1, 2, 1, {1, 1});
  inst.value(0, 0) = 3.0;  // bundle (1,0)
  const lp::Solution sol = lp::solve(build_lip(PerturbedInstance::unperturbed(inst)));
  REQUIRE(sol.optimal());
  CHECK(popt_prices(sol, inst)[1] == doctest::Approx(0.0));
}

TEST_CASE("bundle price is the dot product") {
  PriceVector p{{3.0, 4.0}};
  CHECK(bundle_price(Bundle{{2, 1}}, p) == 10.0);
  const BundleSpace space(2, 3);
  const Allocation a = holding({static_cast<std::int32_t>(*space.index_of(Bundle{{2, 1}})), Allocation::kUnassigned});
  CHECK(allocation_price(a, 0, space, p) == 10.0);
  CHECK(allocation_price(a, 1, space, p) == 0.0);
}

TEST_CASE("supporting prices, hand examples") {
  const AuctionInstance inst = two_bidders();
  const Allocation a = holding({0, Allocation::kUnassigned});

  const VerificationReport at_one = verify_supporting(a, PriceVector{{1.0}}, inst, 0.0);
  CHECK(at_one.supporting_pass);
  CHECK(at_one.supporting_violation == 0.0);
  CHECK(at_one.payoff_difference == std::vector<double>{0.0, 0.0});

  // At 0.5 the loser would rather buy.
  const VerificationReport at_half = verify_supporting(a, PriceVector{{0.5}}, inst, 0.1);
  CHECK_FALSE(at_half.supporting_pass);
  CHECK(at_half.supporting_violation == doctest::Approx(0.5));
  CHECK(at_half.payoff_difference[1] == doctest::Approx(-0.5));

  // At 3 the winner pays more than it is worth. Its bundle is still its best
  // bundle, so the check passes; the payoff difference counts walking away.
  const VerificationReport at_three = verify_supporting(a, PriceVector{{3.0}}, inst, 0.0);
  CHECK(at_three.supporting_pass);
  CHECK(at_three.payoff_difference[0] == doctest::Approx(-1.0));
}

TEST_CASE("envy check, hand examples") {
  const AuctionInstance inst = two_bidders();
  const Allocation fair = holding({0, Allocation::kUnassigned});
  const VerificationReport ok = verify_envy_free(fair, PriceVector{{1.0}}, inst, 0.01);
  CHECK(ok.envy_pass);
  CHECK(ok.envy_violation == 0.0);
  // Agent 1 is exactly indifferent, so the strict reading fails.
  CHECK_FALSE(ok.envy_literal_pass);

  const VerificationReport strict = verify_envy_free(fair, PriceVector{{1.5}}, inst, 0.01);
  CHECK(strict.envy_literal_pass);

  // Zero prices and the item with the low bidder.
  const Allocation wrong = holding({Allocation::kUnassigned, 0});
  const VerificationReport bad = verify_envy_free(wrong, PriceVector{{0.0}}, inst, 0.01);
  CHECK_FALSE(bad.envy_pass);
  CHECK(bad.envy_violation == doctest::Approx(2.0));

  const VerificationReport both = verify_prices(wrong, PriceVector{{0.0}}, inst, 0.01, 0.01);
  CHECK_FALSE(both.supporting_pass);
  CHECK_FALSE(both.envy_pass);
}

TEST_CASE("size mismatches are rejected") {
  const AuctionInstance inst = two_bidders();
  CHECK_THROWS_AS(verify_supporting(Allocation(3), PriceVector{{1.0}}, inst, 0.0), InvalidConfig);
  CHECK_THROWS_AS(verify_envy_free(Allocation(2), PriceVector{{1.0, 2.0}}, inst, 0.0), InvalidConfig);
}

TEST_CASE("every lottery point maximizes weighted payoff at the dual prices") {
  std::mt19937_64 gen(4242);
  std::uniform_real_distribution<double> value(0.0, 10.0);
  for (int trial = 0; trial < 40; ++trial) {
    AuctionInstance inst = AuctionInstance::make(3, 2, 2, {2, 1});
    for (double& v : inst.valuations) v = value(gen);
    MechanismConfig cfg;
    Rng rng(static_cast<std::uint64_t>(trial));
    const PerturbedInstance ctx = perturb(inst, cfg, rng);
    const lp::Solution lip = lp::solve(build_lip(ctx));
    REQUIRE(lip.optimal());
    const PriceVector p = popt_prices(lip, inst);
    const Lottery lottery = construct_lottery(lip.primal, ctx, cfg);
    CAPTURE(trial);
    for (const Allocation& point : lottery.points) {
      CHECK(weighted_argmax_gap(point, p, ctx) <= 1e-7);
      const double eps_u = effective_epsilon_u(cfg, inst);
      CHECK(verify_supporting(point, p, inst, eps_u + 1e-9).supporting_pass);
    }
  }
}
