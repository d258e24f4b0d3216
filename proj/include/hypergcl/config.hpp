#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hypergcl/trainer.hpp"

namespace hypergcl {

/// Malformed config document: bad JSON, unknown key, wrong type or out-of-range value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  ExperimentConfig experiment;
  std::string out_dir = "out";
};

/// Keys not given keep their defaults. Relative dataset paths resolve against
/// `base_dir` when it is nonempty.
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

/// Every effective value, in the same layout parse_run_config accepts.
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace hypergcl
