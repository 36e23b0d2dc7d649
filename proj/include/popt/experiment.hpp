#pragma once

// Monte-Carlo driver: replications of the mechanism over generated grid
// instances (or a fixed instance), swept over boundary fractions, with CSV
// output per statistic.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popt/auction.hpp"
#include "popt/mechanism.hpp"
#include "popt/spectrum.hpp"

namespace popt {

/// splitmix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `index` derived from `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

struct ExperimentConfig {
  GridSpec grid;
  std::optional<AuctionInstance> instance;  // replaces the grid when set
  MechanismConfig mechanism;
  MechanismOptions options;
  std::size_t replications = 1;
  std::uint64_t seed = 0;  // master seed for every replication stream
  std::vector<double> lambdas;  // empty: grid.boundary_fraction alone
  std::filesystem::path out_dir;  // empty: no files written
  std::size_t threads = 0;        // 0: hardware concurrency
  // The exact integer comparator runs only on instances with at most this
  // many variables.
  std::size_t intlp_variable_limit = 2000;

  void validate() const;
};

struct ReplicationMetrics {
  double lambda = 0.0;
  std::size_t replication = 0;
  std::uint64_t generation_seed = 0;
  std::uint64_t mechanism_seed = 0;
  double popt_utility = 0.0;           // sum_t lambda_t u . x^t
  double lp_utility = 0.0;             // unperturbed LP optimum at s
  std::optional<double> intlp_utility;  // exact integer optimum at s + k - 1
  std::vector<int> overallocation;      // per good, sampled allocation
  int total_overallocation = 0;
  double expected_overallocation = 0.0;  // over the lottery
  std::vector<int> allocation_counts;    // units of each good in the sampled allocation
  std::vector<double> prices;
  std::vector<BundleShape> shapes;  // bundles of the sampled allocation
  std::vector<double> payoff_difference;
  std::size_t lottery_size = 0;
  bool verified = true;
  std::string error;  // non-empty when the mechanism threw; metrics are then unset

  bool ok() const { return error.empty(); }
};

struct MetricsReport {
  std::vector<double> lambdas;
  std::size_t replications = 0;
  int rows = 0;  // grid dimensions; 0 for explicit instances
  int cols = 0;
  int k = 0;
  std::vector<int> supplies;
  // lambda-major, replication-minor.
  std::vector<ReplicationMetrics> runs;

  std::span<const ReplicationMetrics> at(std::size_t lambda_index) const;
};

/// One replication; deterministic given its seeds.
ReplicationMetrics run_replication(const ExperimentConfig& cfg, double lambda, std::size_t replication);

/// Runs every (lambda, replication) pair on a worker pool and folds the results
/// in order. Writes the CSV files when cfg.out_dir is set.
MetricsReport run_experiment(const ExperimentConfig& cfg);

/// Writes every CSV file into `dir`; throws Error naming the file on failure.
void write_csv(const MetricsReport& report, const std::filesystem::path& dir);

/// Total-variation distance between two empirical distributions given as samples.
double tv_distance(std::span<const int> a, std::span<const int> b);

}  // namespace popt
