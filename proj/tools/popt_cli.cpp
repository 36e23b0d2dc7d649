// Command-line front end: solve, experiment, oracle, sp-test.
//
// Exit codes: 0 ok, 1 verification failure, 2 input error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "popt/errors.hpp"
#include "popt/experiment.hpp"
#include "popt/io.hpp"
#include "popt/mechanism.hpp"
#include "popt/oracle.hpp"
#include "popt/strategy.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kVerificationFailed = 1;
constexpr int kInputError = 2;

struct Common {
  std::string input;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  double delta_w = popt::MechanismConfig{}.delta_w;
  double delta_eps = popt::MechanismConfig{}.delta_eps;
  double epsilon = popt::MechanismConfig{}.epsilon;
};

popt::InputFormat resolve_format(const Common& c) {
  return c.format.empty() ? popt::format_from_path(c.input) : popt::format_from_string(c.format);
}

// --out-dir, then $POPT_OUT_DIR, then the fallback.
std::filesystem::path output_dir(const std::string& flag, const std::filesystem::path& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("POPT_OUT_DIR"); env && *env) return env;
  return fallback;
}

popt::MechanismConfig mechanism_config(const Common& c) {
  popt::MechanismConfig cfg;
  cfg.delta_w = c.delta_w;
  cfg.delta_eps = c.delta_eps;
  cfg.epsilon = c.epsilon;
  cfg.rng_seed = c.seed.value_or(0);
  return cfg;
}

// Instances come from the file directly; grid specs are generated from their seed.
popt::AuctionInstance load_instance(const Common& c) {
  popt::ParsedInput parsed = popt::parse_input(c.input, resolve_format(c));
  if (auto* inst = std::get_if<popt::AuctionInstance>(&parsed)) return std::move(*inst);
  const auto& spec = std::get<popt::GridSpec>(parsed);
  popt::Rng rng(spec.seed);
  return popt::generate(spec, rng);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw popt::Error("failed writing " + path.string());
}

int run_solve(const Common& c) {
  const popt::AuctionInstance inst = load_instance(c);
  const popt::MechanismConfig cfg = mechanism_config(c);
  popt::Rng rng(cfg.rng_seed);
  const popt::MechanismResult result = popt::run_mechanism(inst, cfg, rng);
  const std::string doc = popt::result_to_json(result, inst);
  std::cout << doc;
  const std::filesystem::path dir = output_dir(c.out_dir, {});
  if (!dir.empty()) write_text(dir / "result.json", doc);
  return result.all_passed() ? kOk : kVerificationFailed;
}

int run_oracle(const Common& c, int extra, std::size_t max_states) {
  const popt::AuctionInstance inst = load_instance(c);
  const popt::OracleResult best = popt::ip_oracle_relaxed(inst, extra, max_states);
  const popt::lp::Solution lp = popt::lp::solve(popt::build_lip(popt::PerturbedInstance::unperturbed(inst)));
  nlohmann::json doc;
  doc["value"] = best.value;
  doc["states"] = best.states;
  doc["lp_value"] = lp.objective_value;
  nlohmann::json agents = nlohmann::json::array();
  for (std::size_t i = 0; i < best.allocation.n_agents(); ++i) {
    if (best.allocation.assigned(i)) {
      agents.push_back((*inst.bundles)[static_cast<std::size_t>(best.allocation.bundle_of[i])].counts);
    } else {
      agents.push_back(nullptr);
    }
  }
  doc["allocation"] = std::move(agents);
  std::cout << doc.dump(2) << "\n";
  return kOk;
}

int run_experiment_cmd(const std::string& config, const Common& c, std::optional<std::size_t> replications) {
  popt::ExperimentConfig cfg = popt::parse_experiment_config(config);
  if (c.seed) cfg.seed = *c.seed;
  if (replications) cfg.replications = *replications;
  cfg.out_dir = output_dir(c.out_dir, cfg.out_dir.empty() ? std::filesystem::path("results") : cfg.out_dir);
  const popt::MetricsReport report = popt::run_experiment(cfg);

  std::size_t failed = 0;
  for (std::size_t l = 0; l < report.lambdas.size(); ++l) {
    double over = 0.0;
    std::size_t ok = 0;
    for (const auto& m : report.at(l)) {
      if (!m.ok() || !m.verified) ++failed;
      if (!m.ok()) continue;
      over += m.total_overallocation;
      ++ok;
    }
    std::printf("lambda %-6g runs %zu mean over-allocation %.4f\n", report.lambdas[l], ok,
                ok ? over / static_cast<double>(ok) : 0.0);
  }
  std::printf("wrote %s\n", cfg.out_dir.string().c_str());
  if (failed) std::fprintf(stderr, "%zu replication(s) failed verification\n", failed);
  return failed ? kVerificationFailed : kOk;
}

int run_sp_test(const Common& c, int truthful, int reported, const std::vector<std::size_t>& scales,
                std::size_t replications) {
  const popt::AuctionInstance inst = load_instance(c);
  if (inst.agent_types.empty()) throw popt::InputError("types", "sp-test needs an instance with type labels");
  popt::TypedPopulation pop;
  pop.n_goods = inst.n_goods;
  pop.k = inst.k;
  pop.supplies = inst.supplies;
  const int n_types = *std::max_element(inst.agent_types.begin(), inst.agent_types.end()) + 1;
  pop.type_values.resize(static_cast<std::size_t>(n_types));
  for (std::size_t i = inst.agent_types.size(); i-- > 0;) {
    const auto t = static_cast<std::size_t>(inst.agent_types[i]);
    pop.type_values[t].assign(inst.valuations.begin() + static_cast<std::ptrdiff_t>(i * inst.n_bundles()),
                              inst.valuations.begin() + static_cast<std::ptrdiff_t>((i + 1) * inst.n_bundles()));
  }
  for (std::size_t t = 0; t < pop.type_values.size(); ++t) {
    if (pop.type_values[t].empty()) throw popt::InputError("types", "type " + std::to_string(t) + " has no agent");
  }

  const popt::MechanismConfig cfg = mechanism_config(c);
  std::string csv = "per_type,gain,half_width,truthful_payoff,misreport_payoff,epsilon_u\n";
  for (std::size_t scale : scales) {
    popt::Rng rng(popt::derive_seed(cfg.rng_seed, scale));
    const popt::MisreportEstimate est =
        popt::misreport_gain(pop, scale, truthful, reported, cfg, rng, replications);
    const double eps_u = popt::effective_epsilon_u(cfg, pop.instantiate(scale));
    char line[256];
    std::snprintf(line, sizeof line, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n", scale, est.gain, est.half_width,
                  est.truthful, est.misreport, eps_u);
    csv += line;
  }
  std::cout << csv;
  const std::filesystem::path dir = output_dir(c.out_dir, {});
  if (!dir.empty()) write_text(dir / "misreport_gain.csv", csv);
  return kOk;
}

void add_common(CLI::App* cmd, Common& c, bool needs_input) {
  auto* in = cmd->add_option("--input", c.input, "instance or grid-spec file");
  if (needs_input) in->required();
  cmd->add_option("--format", c.format, "json or text (default: from the file extension)");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out-dir", c.out_dir, "output directory (overrides POPT_OUT_DIR)");
  cmd->add_option("--delta-w", c.delta_w, "weight perturbation half-width");
  cmd->add_option("--delta-eps", c.delta_eps, "supply perturbation scale");
  cmd->add_option("--epsilon", c.epsilon, "lottery residual tolerance");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lottery-and-price mechanism for k-bundle combinatorial auctions"};
  app.require_subcommand(1);

  Common solve_opts, oracle_opts, exp_opts, sp_opts;
  auto* solve = app.add_subcommand("solve", "run the mechanism on one instance");
  add_common(solve, solve_opts, true);

  auto* oracle = app.add_subcommand("oracle", "exact integer optimum of a small instance");
  add_common(oracle, oracle_opts, true);
  int extra = 0;
  std::size_t max_states = popt::kDefaultOracleStates;
  oracle->add_option("--extra", extra, "add this many units to every supply");
  oracle->add_option("--max-states", max_states, "search node budget");

  auto* experiment = app.add_subcommand("experiment", "Monte-Carlo sweep driven by a JSON config");
  add_common(experiment, exp_opts, false);
  std::string config;
  std::optional<std::size_t> replications;
  experiment->add_option("--config", config, "experiment config (JSON)")->required();
  experiment->add_option("--replications", replications, "override the replication count");

  auto* sp = app.add_subcommand("sp-test", "estimate the gain from misreporting one's type");
  add_common(sp, sp_opts, true);
  int truthful = 0, reported = 1;
  std::vector<std::size_t> scales{5, 20, 80};
  std::size_t sp_reps = 50;
  sp->add_option("--truthful", truthful, "true type of the deviating agent");
  sp->add_option("--reported", reported, "type it reports");
  sp->add_option("--scales", scales, "agents per type")->delimiter(',');
  sp->add_option("--replications", sp_reps, "replications per scale");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) return run_solve(solve_opts);
    if (*oracle) return run_oracle(oracle_opts, extra, max_states);
    if (*experiment) return run_experiment_cmd(config, exp_opts, replications);
    if (*sp) return run_sp_test(sp_opts, truthful, reported, scales, sp_reps);
  } catch (const popt::InputError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInputError;
  } catch (const popt::InvalidConfig& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kInputError;
  } catch (const popt::VerificationFailure& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return kVerificationFailed;
  } catch (const popt::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kVerificationFailed;
  }
  return kOk;
}
