#include "popt/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "popt/errors.hpp"

namespace popt {

using nlohmann::json;

InputFormat format_from_string(const std::string& name) {
  if (name == "json") return InputFormat::Json;
  if (name == "text") return InputFormat::Text;
  throw InputError("format", "unknown input format '" + name + "' (expected json or text)");
}

InputFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? InputFormat::Json : InputFormat::Text;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("input", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- JSON ----

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw InputError(path + key, "missing field");
  return obj.at(key);
}

long long get_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw InputError(field, "expected an integer");
  return v.get<long long>();
}

double get_number(const json& v, const std::string& field) {
  if (!v.is_number()) throw InputError(field, "expected a number");
  return v.get<double>();
}

int get_positive(const json& v, const std::string& field) {
  const long long x = get_int(v, field);
  if (x < 1 || x > std::numeric_limits<int>::max()) throw InputError(field, "expected a positive integer");
  return static_cast<int>(x);
}

AuctionInstance instance_from_json(const json& doc) {
  const int n_agents = get_positive(require(doc, "agents", ""), "agents");
  const int n_goods = get_positive(require(doc, "goods", ""), "goods");
  const int k = get_positive(require(doc, "k", ""), "k");

  const json& supplies_json = require(doc, "supplies", "");
  if (!supplies_json.is_array() || supplies_json.size() != static_cast<std::size_t>(n_goods)) {
    throw InputError("supplies", "expected an array with one entry per good");
  }
  std::vector<int> supplies;
  for (std::size_t j = 0; j < supplies_json.size(); ++j) {
    supplies.push_back(get_positive(supplies_json[j], "supplies[" + std::to_string(j) + "]"));
  }

  AuctionInstance inst;
  try {
    inst = AuctionInstance::make(n_agents, n_goods, k, std::move(supplies));
  } catch (const BundleSpaceOverflow& e) {
    throw InputError("k", e.what());
  }

  const json& vals = require(doc, "valuations", "");
  if (!vals.is_array()) throw InputError("valuations", "expected an array");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t e = 0; e < vals.size(); ++e) {
    const std::string at = "valuations[" + std::to_string(e) + "].";
    const json& entry = vals[e];
    if (!entry.is_object()) throw InputError("valuations[" + std::to_string(e) + "]", "expected an object");
    const long long agent = get_int(require(entry, "agent", at), at + "agent");
    if (agent < 0 || agent >= n_agents) throw InputError(at + "agent", "agent index out of range");
    const json& bundle_json = require(entry, "bundle", at);
    if (!bundle_json.is_array() || bundle_json.size() != static_cast<std::size_t>(n_goods)) {
      throw InputError(at + "bundle", "expected one count per good");
    }
    Bundle bundle;
    for (const json& c : bundle_json) {
      const long long count = get_int(c, at + "bundle");
      if (count < 0 || count > k) throw InputError(at + "bundle", "counts must lie in [0, k]");
      bundle.counts.push_back(static_cast<int>(count));
    }
    const auto index = inst.bundles->index_of(bundle);
    if (!index) throw InputError(at + "bundle", "bundle size must lie in [1, k]");
    const double value = get_number(require(entry, "value", at), at + "value");
    if (!std::isfinite(value) || value < 0.0) throw InputError(at + "value", "values must be finite and >= 0");
    if (!seen.emplace(static_cast<std::size_t>(agent), *index).second) {
      throw InputError(at + "bundle", "duplicate valuation for this agent and bundle");
    }
    inst.value(static_cast<std::size_t>(agent), *index) = value;
  }

  if (doc.contains("types")) {
    const json& types = doc.at("types");
    if (!types.is_array() || types.size() != static_cast<std::size_t>(n_agents)) {
      throw InputError("types", "expected one type label per agent");
    }
    for (std::size_t i = 0; i < types.size(); ++i) {
      const long long t = get_int(types[i], "types[" + std::to_string(i) + "]");
      if (t < 0 || t > std::numeric_limits<int>::max()) throw InputError("types[" + std::to_string(i) + "]", "must be >= 0");
      inst.agent_types.push_back(static_cast<int>(t));
    }
  }
  return inst;
}

GridSpec grid_from_json(const json& g) {
  if (!g.is_object()) throw InputError("grid", "expected an object");
  GridSpec spec;
  auto positive = [&](const char* key, int& out) {
    if (g.contains(key)) out = get_positive(g.at(key), std::string("grid.") + key);
  };
  positive("rows", spec.rows);
  positive("cols", spec.cols);
  positive("bands", spec.bands);
  positive("agents", spec.agents);
  positive("max_bundle", spec.max_bundle);
  if (g.contains("user_intensity")) spec.user_intensity = get_number(g.at("user_intensity"), "grid.user_intensity");
  if (g.contains("boundary_fraction")) {
    spec.boundary_fraction = get_number(g.at("boundary_fraction"), "grid.boundary_fraction");
  }
  if (g.contains("seed")) {
    const json& s = g.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw InputError("grid.seed", "expected a non-negative integer");
    }
    spec.seed = s.get<std::uint64_t>();
  }
  if (g.contains("model")) {
    if (!g.at("model").is_string()) throw InputError("grid.model", "expected a string");
    try {
      spec.model = utility_model_from_string(g.at("model").get<std::string>());
    } catch (const InputError& e) {
      throw InputError("grid.model", e.what());
    }
  }
  if (!(spec.user_intensity >= 0.0)) throw InputError("grid.user_intensity", "must be >= 0");
  if (!(spec.boundary_fraction > 0.0 && spec.boundary_fraction < 1.0)) {
    throw InputError("grid.boundary_fraction", "must lie in (0, 1)");
  }
  return spec;
}

json parse_json_document(const std::string& content) {
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw InputError("json", e.what());
  }
}

ParsedInput parse_json(const std::string& content) {
  const json doc = parse_json_document(content);
  if (!doc.is_object()) throw InputError("json", "top level must be an object");
  if (doc.contains("grid")) return grid_from_json(doc.at("grid"));
  return instance_from_json(doc);
}

// ---- text ----

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& content) {
  std::vector<Line> lines;
  std::istringstream in(content);
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    Line line{number, {}};
    for (std::string tok; ls >> tok;) line.tokens.push_back(tok);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

std::string where(const Line& line, const std::string& field) {
  return "line " + std::to_string(line.number) + ": " + field;
}

long long to_int(const Line& line, const std::string& tok, const std::string& field) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || tok.empty()) throw InputError(where(line, field), "expected an integer, got '" + tok + "'");
  return v;
}

double to_double(const Line& line, const std::string& tok, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size() || tok.empty()) throw InputError(where(line, field), "expected a number, got '" + tok + "'");
  return v;
}

int to_positive(const Line& line, const std::string& tok, const std::string& field) {
  const long long v = to_int(line, tok, field);
  if (v < 1 || v > std::numeric_limits<int>::max()) throw InputError(where(line, field), "expected a positive integer");
  return static_cast<int>(v);
}

GridSpec parse_text_grid(const Line& line) {
  if (line.tokens.size() != 9 && line.tokens.size() != 10) {
    throw InputError(where(line, "grid"), "expected: grid rows cols bands agents max_bundle mu lambda seed [model]");
  }
  GridSpec spec;
  spec.rows = to_positive(line, line.tokens[1], "rows");
  spec.cols = to_positive(line, line.tokens[2], "cols");
  spec.bands = to_positive(line, line.tokens[3], "bands");
  spec.agents = to_positive(line, line.tokens[4], "agents");
  spec.max_bundle = to_positive(line, line.tokens[5], "max_bundle");
  spec.user_intensity = to_double(line, line.tokens[6], "user_intensity");
  spec.boundary_fraction = to_double(line, line.tokens[7], "boundary_fraction");
  const long long seed = to_int(line, line.tokens[8], "seed");
  if (seed < 0) throw InputError(where(line, "seed"), "must be >= 0");
  spec.seed = static_cast<std::uint64_t>(seed);
  if (line.tokens.size() == 10) {
    try {
      spec.model = utility_model_from_string(line.tokens[9]);
    } catch (const InputError& e) {
      throw InputError(where(line, "model"), e.what());
    }
  }
  if (!(spec.user_intensity >= 0.0)) throw InputError(where(line, "user_intensity"), "must be >= 0");
  if (!(spec.boundary_fraction > 0.0 && spec.boundary_fraction < 1.0)) {
    throw InputError(where(line, "boundary_fraction"), "must lie in (0, 1)");
  }
  return spec;
}

ParsedInput parse_text(const std::string& content) {
  const std::vector<Line> lines = tokenize(content);
  if (lines.empty()) throw InputError("header", "empty input");
  if (lines[0].tokens[0] == "grid") {
    if (lines.size() > 1) throw InputError(where(lines[1], "grid"), "unexpected content after the grid line");
    return parse_text_grid(lines[0]);
  }

  const Line& header = lines[0];
  if (header.tokens.size() != 3) throw InputError(where(header, "header"), "expected: N G k");
  const int n_agents = to_positive(header, header.tokens[0], "agents");
  const int n_goods = to_positive(header, header.tokens[1], "goods");
  const int k = to_positive(header, header.tokens[2], "k");

  if (lines.size() < 2) throw InputError("supplies", "missing supply line");
  const Line& supply_line = lines[1];
  if (supply_line.tokens.size() != static_cast<std::size_t>(n_goods)) {
    throw InputError(where(supply_line, "supplies"), "expected one supply per good");
  }
  std::vector<int> supplies;
  for (const std::string& tok : supply_line.tokens) supplies.push_back(to_positive(supply_line, tok, "supplies"));

  AuctionInstance inst;
  try {
    inst = AuctionInstance::make(n_agents, n_goods, k, std::move(supplies));
  } catch (const BundleSpaceOverflow& e) {
    throw InputError(where(header, "k"), e.what());
  }

  std::size_t next = 2;
  if (next < lines.size() && lines[next].tokens[0] == "types") {
    const Line& tl = lines[next];
    if (tl.tokens.size() != static_cast<std::size_t>(n_agents) + 1) {
      throw InputError(where(tl, "types"), "expected one type label per agent");
    }
    for (std::size_t i = 1; i < tl.tokens.size(); ++i) {
      const long long t = to_int(tl, tl.tokens[i], "types");
      if (t < 0 || t > std::numeric_limits<int>::max()) throw InputError(where(tl, "types"), "must be >= 0");
      inst.agent_types.push_back(static_cast<int>(t));
    }
    ++next;
  }

  std::set<std::pair<long long, long long>> seen;
  for (; next < lines.size(); ++next) {
    const Line& l = lines[next];
    if (l.tokens.size() != 3) throw InputError(where(l, "valuation"), "expected: agent bundle-index value");
    const long long agent = to_int(l, l.tokens[0], "agent");
    if (agent < 0 || agent >= n_agents) throw InputError(where(l, "agent"), "agent index out of range");
    const long long bundle = to_int(l, l.tokens[1], "bundle");
    if (bundle < 0 || static_cast<std::size_t>(bundle) >= inst.n_bundles()) {
      throw InputError(where(l, "bundle"), "bundle index out of range");
    }
    const double value = to_double(l, l.tokens[2], "value");
    if (!std::isfinite(value) || value < 0.0) throw InputError(where(l, "value"), "values must be finite and >= 0");
    if (!seen.emplace(agent, bundle).second) {
      throw InputError(where(l, "bundle"), "duplicate valuation for this agent and bundle");
    }
    inst.value(static_cast<std::size_t>(agent), static_cast<std::size_t>(bundle)) = value;
  }
  return inst;
}

json grid_to_json(const GridSpec& spec) {
  return json{{"rows", spec.rows},
              {"cols", spec.cols},
              {"bands", spec.bands},
              {"agents", spec.agents},
              {"max_bundle", spec.max_bundle},
              {"user_intensity", spec.user_intensity},
              {"boundary_fraction", spec.boundary_fraction},
              {"seed", spec.seed},
              {"model", to_string(spec.model)}};
}

json instance_to_json(const AuctionInstance& inst) {
  json doc;
  doc["agents"] = inst.n_agents;
  doc["goods"] = inst.n_goods;
  doc["k"] = inst.k;
  doc["supplies"] = inst.supplies;
  json vals = json::array();
  for (std::size_t i = 0; i < static_cast<std::size_t>(inst.n_agents); ++i) {
    for (std::size_t b = 0; b < inst.n_bundles(); ++b) {
      const double v = inst.value(i, b);
      if (v != 0.0) vals.push_back({{"agent", i}, {"bundle", (*inst.bundles)[b].counts}, {"value", v}});
    }
  }
  doc["valuations"] = std::move(vals);
  if (!inst.agent_types.empty()) doc["types"] = inst.agent_types;
  return doc;
}

}  // namespace

ParsedInput parse_input_string(const std::string& content, InputFormat format) {
  return format == InputFormat::Json ? parse_json(content) : parse_text(content);
}

ParsedInput parse_input(const std::filesystem::path& path, InputFormat format) {
  return parse_input_string(read_file(path), format);
}

std::string serialize(const AuctionInstance& inst, InputFormat format) {
  if (format == InputFormat::Json) return instance_to_json(inst).dump(2) + "\n";
  std::ostringstream out;
  out << inst.n_agents << ' ' << inst.n_goods << ' ' << inst.k << '\n';
  for (std::size_t j = 0; j < inst.supplies.size(); ++j) out << (j ? " " : "") << inst.supplies[j];
  out << '\n';
  if (!inst.agent_types.empty()) {
    out << "types";
    for (int t : inst.agent_types) out << ' ' << t;
    out << '\n';
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(inst.n_agents); ++i) {
    for (std::size_t b = 0; b < inst.n_bundles(); ++b) {
      const double v = inst.value(i, b);
      if (v != 0.0) out << i << ' ' << b << ' ' << format_double(v) << '\n';
    }
  }
  return out.str();
}

std::string serialize(const GridSpec& spec, InputFormat format) {
  if (format == InputFormat::Json) return json{{"grid", grid_to_json(spec)}}.dump(2) + "\n";
  std::ostringstream out;
  out << "grid " << spec.rows << ' ' << spec.cols << ' ' << spec.bands << ' ' << spec.agents << ' ' << spec.max_bundle
      << ' ' << format_double(spec.user_intensity) << ' ' << format_double(spec.boundary_fraction) << ' ' << spec.seed
      << ' ' << to_string(spec.model) << '\n';
  return out.str();
}

std::string serialize(const ParsedInput& input, InputFormat format) {
  return std::visit([&](const auto& v) { return serialize(v, format); }, input);
}

ExperimentConfig parse_experiment_config_string(const std::string& content, const std::filesystem::path& base_dir) {
  const json doc = parse_json_document(content);
  if (!doc.is_object()) throw InputError("config", "top level must be an object");
  ExperimentConfig cfg;
  const int sources = doc.contains("grid") + doc.contains("instance") + doc.contains("instance_file");
  if (sources > 1) throw InputError("config", "give exactly one of grid, instance, instance_file");
  if (doc.contains("grid")) {
    cfg.grid = grid_from_json(doc.at("grid"));
    cfg.seed = cfg.grid.seed;
  } else if (doc.contains("instance")) {
    cfg.instance = instance_from_json(doc.at("instance"));
  } else if (doc.contains("instance_file")) {
    if (!doc.at("instance_file").is_string()) throw InputError("instance_file", "expected a path");
    std::filesystem::path p = doc.at("instance_file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    ParsedInput parsed = parse_input(p, format_from_path(p));
    if (auto* inst = std::get_if<AuctionInstance>(&parsed)) {
      cfg.instance = std::move(*inst);
    } else {
      cfg.grid = std::get<GridSpec>(parsed);
      cfg.seed = cfg.grid.seed;
    }
  }

  if (doc.contains("mechanism")) {
    const json& m = doc.at("mechanism");
    if (!m.is_object()) throw InputError("mechanism", "expected an object");
    if (m.contains("delta_w")) cfg.mechanism.delta_w = get_number(m.at("delta_w"), "mechanism.delta_w");
    if (m.contains("delta_eps")) cfg.mechanism.delta_eps = get_number(m.at("delta_eps"), "mechanism.delta_eps");
    if (m.contains("epsilon")) cfg.mechanism.epsilon = get_number(m.at("epsilon"), "mechanism.epsilon");
    if (m.contains("epsilon_u")) cfg.mechanism.epsilon_u = get_number(m.at("epsilon_u"), "mechanism.epsilon_u");
    if (m.contains("mlip_resolve_limit")) {
      const long long v = get_int(m.at("mlip_resolve_limit"), "mechanism.mlip_resolve_limit");
      if (v < 0) throw InputError("mechanism.mlip_resolve_limit", "must be >= 0");
      cfg.options.mlip_resolve_limit = static_cast<std::size_t>(v);
    }
  }
  if (doc.contains("replications")) cfg.replications = static_cast<std::size_t>(get_positive(doc.at("replications"), "replications"));
  if (doc.contains("lambdas")) {
    const json& l = doc.at("lambdas");
    if (!l.is_array()) throw InputError("lambdas", "expected an array");
    for (std::size_t i = 0; i < l.size(); ++i) {
      const double v = get_number(l[i], "lambdas[" + std::to_string(i) + "]");
      if (!(v > 0.0 && v < 1.0)) throw InputError("lambdas[" + std::to_string(i) + "]", "must lie in (0, 1)");
      cfg.lambdas.push_back(v);
    }
  }
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw InputError("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("threads")) {
    const long long t = get_int(doc.at("threads"), "threads");
    if (t < 0) throw InputError("threads", "must be >= 0");
    cfg.threads = static_cast<std::size_t>(t);
  }
  if (doc.contains("intlp_variable_limit")) {
    const long long v = get_int(doc.at("intlp_variable_limit"), "intlp_variable_limit");
    if (v < 0) throw InputError("intlp_variable_limit", "must be >= 0");
    cfg.intlp_variable_limit = static_cast<std::size_t>(v);
  }
  if (doc.contains("out_dir")) {
    if (!doc.at("out_dir").is_string()) throw InputError("out_dir", "expected a path");
    cfg.out_dir = doc.at("out_dir").get<std::string>();
  }
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config_string(read_file(path), path.parent_path());
}

std::string result_to_json(const MechanismResult& result, const AuctionInstance& instance) {
  const BundleSpace& bundles = *instance.bundles;
  auto allocation_json = [&](const Allocation& a) {
    json agents = json::array();
    for (std::size_t i = 0; i < a.n_agents(); ++i) {
      if (a.assigned(i)) {
        agents.push_back(bundles[static_cast<std::size_t>(a.bundle_of[i])].counts);
      } else {
        agents.push_back(nullptr);
      }
    }
    return agents;
  };

  json doc;
  doc["lp_objective"] = result.lp_objective;
  doc["expected_objective"] = result.expected_objective;
  doc["epsilon_u"] = result.epsilon_u;
  doc["prices"] = result.prices.prices;
  json lottery = json::array();
  for (std::size_t t = 0; t < result.lottery.size(); ++t) {
    const VerificationReport& r = result.reports[t];
    json point{{"weight", result.lottery.weights[t]},
               {"allocation", allocation_json(result.lottery.points[t])},
               {"overallocation", total_overallocation(result.lottery.points[t], instance)},
               {"supporting_violation", r.supporting_violation},
               {"supporting_pass", r.supporting_pass},
               {"envy_violation", r.envy_violation},
               {"envy_pass", r.envy_pass},
               {"envy_literal_pass", r.envy_literal_pass}};
    if (t < result.mlip.size()) {
      point["mlip_supplies"] = result.mlip[t].supplies;
      point["mlip_resolved"] = result.mlip[t].resolved;
    }
    lottery.push_back(std::move(point));
  }
  doc["lottery"] = std::move(lottery);
  doc["lottery_residual"] = result.lottery.residual;
  doc["sampled"] = result.sampled;
  doc["allocation"] = allocation_json(result.allocation());
  doc["payoff_difference"] = result.reports[result.sampled].payoff_difference;
  doc["verified"] = result.all_passed();
  return doc.dump(2) + "\n";
}

}  // namespace popt
