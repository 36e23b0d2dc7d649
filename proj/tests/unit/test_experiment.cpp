#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "popt/errors.hpp"
#include "popt/experiment.hpp"

using namespace popt;

namespace {

ExperimentConfig small_grid(std::size_t replications) {
  ExperimentConfig cfg;
  cfg.grid.rows = 2;
  cfg.grid.cols = 2;
  cfg.grid.bands = 2;
  cfg.grid.agents = 4;
  cfg.grid.max_bundle = 2;
  cfg.grid.user_intensity = 5.0;
  cfg.replications = replications;
  cfg.lambdas = {0.2, 0.6};
  cfg.seed = 17;
  cfg.threads = 1;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("splitmix64 reference value") {
  // First output of the reference generator seeded with 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(derive_seed(5, 0) == splitmix64(5));
  CHECK(derive_seed(5, 1) != derive_seed(5, 2));
}

TEST_CASE("total-variation distance") {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 1, 1}, c{2, 3};
  CHECK(tv_distance(a, a) == 0.0);
  CHECK(tv_distance(a, b) == doctest::Approx(0.25));
  CHECK(tv_distance(a, c) == doctest::Approx(1.0));
  CHECK(tv_distance(b, a) == tv_distance(a, b));
}

TEST_CASE("empty markets allocate nothing") {
  ExperimentConfig cfg = small_grid(3);
  cfg.grid.user_intensity = 0.0;
  const MetricsReport report = run_experiment(cfg);
  REQUIRE(report.runs.size() == 6);
  for (const ReplicationMetrics& m : report.runs) {
    CHECK(m.ok());
    CHECK(m.popt_utility == 0.0);
    CHECK(m.lp_utility == 0.0);
    CHECK(m.total_overallocation == 0);
  }
}

TEST_CASE("replications are deterministic and independent of the thread count") {
  ExperimentConfig one = small_grid(4);
  ExperimentConfig many = one;
  many.threads = 3;
  const MetricsReport a = run_experiment(one);
  const MetricsReport b = run_experiment(many);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t t = 0; t < a.runs.size(); ++t) {
    CAPTURE(t);
    CHECK(a.runs[t].ok());
    CHECK(a.runs[t].verified);
    CHECK(a.runs[t].generation_seed == b.runs[t].generation_seed);
    CHECK(a.runs[t].popt_utility == b.runs[t].popt_utility);
    CHECK(a.runs[t].allocation_counts == b.runs[t].allocation_counts);
    CHECK(a.runs[t].prices == b.runs[t].prices);
    // Utility sits between the exact optimum at s and the relaxed optimum.
    CHECK(a.runs[t].popt_utility <= a.runs[t].lp_utility * (1.0 + 1e-4) + 1e-9);
    REQUIRE(a.runs[t].intlp_utility);
    for (std::size_t j = 0; j < a.runs[t].overallocation.size(); ++j) {
      CHECK(a.runs[t].overallocation[j] <= a.k - 1);
    }
  }
  // Replication r sees the same instance at every lambda.
  CHECK(a.at(0)[1].generation_seed == a.at(1)[1].generation_seed);
}

TEST_CASE("CSV files are written with their headers") {
  ExperimentConfig cfg = small_grid(2);
  const auto dir = std::filesystem::temp_directory_path() / "popt_experiment_test";
  std::filesystem::remove_all(dir);
  cfg.out_dir = dir;
  run_experiment(cfg);
  for (const char* name : {"replications.csv", "utility_vs_lambda.csv", "overallocation_vs_lambda.csv",
                           "overallocation_hist.csv", "allocation_counts.csv", "price_vs_lambda.csv",
                           "tv_distance.csv", "bundle_shapes.csv", "payoff_difference.csv"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir / name));
  }
  const std::string over = slurp(dir / "overallocation_vs_lambda.csv");
  CHECK(over.rfind("lambda,mean_overallocation,max_overallocation,mean_expected_overallocation,runs\n", 0) == 0);
  CHECK(over.find("\n0.2,") != std::string::npos);
  CHECK(over.find("\n0.6,") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("explicit instances report lambda as NA") {
  ExperimentConfig cfg;
  AuctionInstance inst = AuctionInstance::make(2, 1, 1, {1});
  inst.value(0, 0) = 2.0;
  inst.value(1, 0) = 1.0;
  cfg.instance = inst;
  cfg.replications = 2;
  cfg.threads = 1;
  const auto dir = std::filesystem::temp_directory_path() / "popt_experiment_na";
  cfg.out_dir = dir;
  const MetricsReport report = run_experiment(cfg);
  // The lottery gives the unit to agent 0 with probability s~ = 1 - eps.
  CHECK(report.runs[0].popt_utility == doctest::Approx(2.0).epsilon(0.01));
  CHECK(report.runs[0].popt_utility < 2.0);
  CHECK(report.runs[0].intlp_utility.value_or(-1.0) == 2.0);
  const std::string utility = slurp(dir / "utility_vs_lambda.csv");
  CHECK(utility.find("\nNA,") != std::string::npos);
  CHECK(utility.find(",2,2\n") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bad configs are rejected") {
  ExperimentConfig cfg = small_grid(1);
  cfg.replications = 0;
  CHECK_THROWS_AS(run_experiment(cfg), InvalidConfig);
  cfg.replications = 1;
  cfg.lambdas = {1.0};
  CHECK_THROWS_AS(run_experiment(cfg), InvalidConfig);
}
