#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace hypergcl::verify {

/// Deliberate defects used to confirm that a suite can fail.
enum class Mutation { kNone, kMobiusSign };

struct Options {
  std::uint64_t seed = 0;
  int geometry_samples = 10000;
  int spectral_samples = 1000;
  int gradient_configs = 5;
  Mutation mutation = Mutation::kNone;
};

struct PropertyResult {
  std::string suite;
  std::string name;
  bool passed = false;
  int samples = 0;
  double worst = 0.0;      // largest observed error (or the checked statistic)
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

/// geometry, autodiff, density, spectral.
const std::vector<std::string>& suite_names();

/// Runs one suite, or every suite for "all". Throws std::invalid_argument on an unknown name.
std::vector<PropertyResult> run(const std::string& suite, const Options& opts = {});

bool all_passed(const std::vector<PropertyResult>& results);
nlohmann::json report(const std::vector<PropertyResult>& results);

double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Pearson correlation of average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hypergcl::verify
