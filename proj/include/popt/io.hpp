#pragma once

// Instance and grid-spec files in JSON and plain text, experiment configs, and
// JSON output of mechanism results.

#include <filesystem>
#include <string>
#include <variant>

#include "popt/auction.hpp"
#include "popt/experiment.hpp"
#include "popt/mechanism.hpp"
#include "popt/spectrum.hpp"

namespace popt {

enum class InputFormat { Json, Text };

/// "json" or "text"; InputError otherwise.
InputFormat format_from_string(const std::string& name);
/// .json -> Json, anything else -> Text.
InputFormat format_from_path(const std::filesystem::path& path);

using ParsedInput = std::variant<AuctionInstance, GridSpec>;

/// Throws InputError naming the offending field (and line for text input).
ParsedInput parse_input(const std::filesystem::path& path, InputFormat format);
ParsedInput parse_input_string(const std::string& content, InputFormat format);

/// Canonical form: valuations listed agent-major in bundle order, zeros omitted.
std::string serialize(const AuctionInstance& instance, InputFormat format);
std::string serialize(const GridSpec& spec, InputFormat format);
std::string serialize(const ParsedInput& input, InputFormat format);

/// JSON experiment config: {"grid": {...}} or {"instance": {...}} or
/// {"instance_file": path}, plus optional "mechanism", "replications",
/// "lambdas", "seed", "threads", "intlp_variable_limit", "out_dir".
/// Relative instance_file paths resolve against the config's directory.
ExperimentConfig parse_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config_string(const std::string& content,
                                                const std::filesystem::path& base_dir = {});

/// Lottery, prices, sampled allocation and reports as a JSON document.
std::string result_to_json(const MechanismResult& result, const AuctionInstance& instance);

}  // namespace popt
