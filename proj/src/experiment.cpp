#include "popt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "popt/errors.hpp"
#include "popt/oracle.hpp"

namespace popt {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + index * 0x9E3779B97F4A7C15ULL);
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw InvalidConfig("replications must be >= 1");
  for (double l : lambdas) {
    if (!(l > 0.0 && l < 1.0)) throw InvalidConfig("lambda sweep values must lie in (0, 1)");
  }
  if (instance) {
    instance->validate();
  } else {
    grid.validate();
  }
  mechanism.validate();
}

std::span<const ReplicationMetrics> MetricsReport::at(std::size_t lambda_index) const {
  return std::span<const ReplicationMetrics>(runs).subspan(lambda_index * replications, replications);
}

ReplicationMetrics run_replication(const ExperimentConfig& cfg, double lambda, std::size_t replication) {
  ReplicationMetrics m;
  m.lambda = lambda;
  m.replication = replication;
  m.generation_seed = derive_seed(cfg.seed, 2 * replication);
  m.mechanism_seed = derive_seed(cfg.seed, 2 * replication + 1);

  try {
    AuctionInstance inst;
    if (cfg.instance) {
      inst = *cfg.instance;
    } else {
      GridSpec spec = cfg.grid;
      spec.boundary_fraction = lambda;
      Rng gen(m.generation_seed);
      inst = generate(spec, gen);
    }

    MechanismConfig mech = cfg.mechanism;
    mech.rng_seed = m.mechanism_seed;
    Rng rng(m.mechanism_seed);
    const MechanismResult res = run_mechanism(inst, mech, rng, cfg.options);
    const std::size_t nb = inst.n_bundles();

    for (std::size_t t = 0; t < res.lottery.size(); ++t) {
      m.popt_utility += res.lottery.weights[t] * res.lottery.points[t].objective(inst.valuations, nb);
      m.expected_overallocation += res.lottery.weights[t] * total_overallocation(res.lottery.points[t], inst);
    }
    const lp::Solution plain = lp::solve(build_lip(PerturbedInstance::unperturbed(inst)));
    if (!plain.optimal()) throw NumericalFailure("unperturbed LP did not solve");
    m.lp_utility = plain.objective_value;
    if (inst.num_variables() <= cfg.intlp_variable_limit) {
      try {
        m.intlp_utility = ip_oracle_relaxed(inst, inst.k - 1).value;
      } catch (const OracleTooLarge&) {
      }
    }

    const Allocation& chosen = res.allocation();
    m.allocation_counts = chosen.consumption(*inst.bundles);
    m.overallocation.resize(m.allocation_counts.size());
    for (std::size_t j = 0; j < m.allocation_counts.size(); ++j) {
      m.overallocation[j] = std::max(0, m.allocation_counts[j] - inst.supplies[j]);
      m.total_overallocation += m.overallocation[j];
    }
    m.prices = res.prices.prices;
    if (!cfg.instance) {
      for (std::size_t i = 0; i < chosen.n_agents(); ++i) {
        if (!chosen.assigned(i)) continue;
        m.shapes.push_back(classify_bundle_shape((*inst.bundles)[static_cast<std::size_t>(chosen.bundle_of[i])],
                                                 cfg.grid.rows, cfg.grid.cols));
      }
    }
    m.payoff_difference = res.reports[res.sampled].payoff_difference;
    m.lottery_size = res.lottery.size();
    m.verified = res.all_passed();
  } catch (const Error& e) {
    m.error = e.what();
    m.verified = false;
  }
  return m;
}

MetricsReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  MetricsReport report;
  report.lambdas = cfg.lambdas;
  if (report.lambdas.empty()) report.lambdas.push_back(cfg.instance ? 0.0 : cfg.grid.boundary_fraction);
  report.replications = cfg.replications;
  if (cfg.instance) {
    report.k = cfg.instance->k;
    report.supplies = cfg.instance->supplies;
  } else {
    report.rows = cfg.grid.rows;
    report.cols = cfg.grid.cols;
    report.k = cfg.grid.max_bundle;
    report.supplies.assign(static_cast<std::size_t>(cfg.grid.n_cells()), cfg.grid.bands);
  }

  const std::size_t tasks = report.lambdas.size() * cfg.replications;
  report.runs.resize(tasks);
  std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, tasks);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t l = task / cfg.replications;
      const std::size_t r = task % cfg.replications;
      report.runs[task] = run_replication(cfg, report.lambdas[l], r);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  if (!cfg.out_dir.empty()) write_csv(report, cfg.out_dir);
  return report;
}

double tv_distance(std::span<const int> a, std::span<const int> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::map<int, double> diff;
  for (int v : a) diff[v] += 1.0 / static_cast<double>(a.size());
  for (int v : b) diff[v] -= 1.0 / static_cast<double>(b.size());
  double total = 0.0;
  for (const auto& [value, d] : diff) total += std::abs(d);
  return 0.5 * total;
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    out_ << header << '\n';
  }
  ~CsvFile() noexcept(false) {
    out_.flush();
    if (!out_ && std::uncaught_exceptions() == 0) throw Error("failed writing " + path_.string());
  }
  template <typename... Fields>
  void row(const Fields&... fields) {
    std::size_t n = 0;
    ((out_ << (n++ ? "," : "") << fields), ...);
    out_ << '\n';
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

std::vector<int> neighbor_counts(int rows, int cols) {
  std::vector<int> out(static_cast<std::size_t>(rows * cols), 0);
  for (const GridEdge& e : grid_edges(rows, cols)) ++out[static_cast<std::size_t>(e.from)];
  return out;
}

}  // namespace

void write_csv(const MetricsReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  const bool grid = report.rows > 0;
  const std::size_t n_goods = report.supplies.size();
  const std::vector<int> neighbors = grid ? neighbor_counts(report.rows, report.cols) : std::vector<int>{};
  auto lambda_text = [&](std::size_t l) { return grid ? num(report.lambdas[l]) : std::string("NA"); };
  const int max_over = (report.k - 1) * static_cast<int>(n_goods);

  CsvFile runs(dir / "replications.csv",
               "lambda,replication,generation_seed,mechanism_seed,popt_utility,lp_utility,intlp_utility,"
               "total_overallocation,expected_overallocation,lottery_size,verified,error");
  CsvFile utility(dir / "utility_vs_lambda.csv",
                  "lambda,mean_total_utility_popt,mean_total_utility_lp,mean_total_utility_intlp");
  CsvFile over(dir / "overallocation_vs_lambda.csv",
               "lambda,mean_overallocation,max_overallocation,mean_expected_overallocation,runs");
  CsvFile hist(dir / "overallocation_hist.csv", "lambda,overallocation,count,cdf");
  CsvFile counts(dir / "allocation_counts.csv", "lambda,cell,units,count,probability");
  CsvFile prices(dir / "price_vs_lambda.csv", "lambda,cell,neighbors,mean_price");
  CsvFile tv(dir / "tv_distance.csv", "lambda,cell_a,cell_b,similar,tv_distance");
  CsvFile shapes(dir / "bundle_shapes.csv", "lambda,size,internal_boundaries,multiband,count");
  CsvFile payoff(dir / "payoff_difference.csv", "lambda,replication,agent,payoff_difference");

  for (std::size_t l = 0; l < report.lambdas.size(); ++l) {
    const std::string lam = lambda_text(l);
    std::vector<const ReplicationMetrics*> ok;
    for (const ReplicationMetrics& m : report.at(l)) {
      runs.row(lam, m.replication, m.generation_seed, m.mechanism_seed, num(m.popt_utility), num(m.lp_utility),
               m.intlp_utility ? num(*m.intlp_utility) : std::string(), m.total_overallocation,
               num(m.expected_overallocation), m.lottery_size, m.verified ? 1 : 0, '"' + m.error + '"');
      if (m.ok()) ok.push_back(&m);
    }
    if (ok.empty()) continue;
    const double n = static_cast<double>(ok.size());

    double popt = 0.0, lpu = 0.0, intlp = 0.0, over_sum = 0.0, expected = 0.0;
    int over_max = 0;
    bool all_intlp = true;
    std::vector<std::size_t> over_hist(static_cast<std::size_t>(max_over) + 1, 0);
    std::vector<std::vector<int>> per_cell(n_goods);
    std::vector<double> price_sum(n_goods, 0.0);
    std::map<std::tuple<int, int, int>, std::size_t> shape_hist;
    for (const ReplicationMetrics* m : ok) {
      popt += m->popt_utility;
      lpu += m->lp_utility;
      all_intlp &= m->intlp_utility.has_value();
      intlp += m->intlp_utility.value_or(0.0);
      over_sum += m->total_overallocation;
      over_max = std::max(over_max, m->total_overallocation);
      expected += m->expected_overallocation;
      ++over_hist[static_cast<std::size_t>(std::min(m->total_overallocation, max_over))];
      for (std::size_t j = 0; j < n_goods; ++j) {
        per_cell[j].push_back(m->allocation_counts[j]);
        price_sum[j] += m->prices[j];
      }
      for (const BundleShape& s : m->shapes) ++shape_hist[{s.size, s.internal_boundaries, s.multiband ? 1 : 0}];
      for (std::size_t i = 0; i < m->payoff_difference.size(); ++i) {
        payoff.row(lam, m->replication, i, num(m->payoff_difference[i]));
      }
    }
    utility.row(lam, num(popt / n), num(lpu / n), all_intlp ? num(intlp / n) : std::string());
    over.row(lam, num(over_sum / n), over_max, num(expected / n), ok.size());
    std::size_t cumulative = 0;
    for (std::size_t v = 0; v < over_hist.size(); ++v) {
      cumulative += over_hist[v];
      hist.row(lam, v, over_hist[v], num(static_cast<double>(cumulative) / n));
    }
    for (std::size_t j = 0; j < n_goods; ++j) {
      std::map<int, std::size_t> dist;
      for (int c : per_cell[j]) ++dist[c];
      for (const auto& [units, c] : dist) counts.row(lam, j, units, c, num(static_cast<double>(c) / n));
      prices.row(lam, j, grid ? std::to_string(neighbors[j]) : std::string(), num(price_sum[j] / n));
    }
    for (std::size_t a = 0; a < n_goods; ++a) {
      for (std::size_t b = a + 1; b < n_goods; ++b) {
        const std::string similar = grid ? std::to_string(neighbors[a] == neighbors[b] ? 1 : 0) : std::string();
        tv.row(lam, a, b, similar, num(tv_distance(per_cell[a], per_cell[b])));
      }
    }
    for (const auto& [key, c] : shape_hist) {
      shapes.row(lam, std::get<0>(key), std::get<1>(key), std::get<2>(key), c);
    }
  }
}

}  // namespace popt
