#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "hypergcl/graph.hpp"
#include "hypergcl/losses.hpp"

namespace hypergcl {

enum class SyntheticKind { kBalancedTree, kSbm };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kBalancedTree;
  int branching = 3;  // balanced tree
  int depth = 4;      // levels below the root
  std::vector<int> block_sizes{50, 50};  // sbm
  double p_in = 0.2;
  double p_out = 0.01;
  int feature_dim = 16;
  double signal = 1.0;  // one-hot amplitude
  double noise = 1.0;   // Gaussian feature noise stddev
  int train_per_class = 10;
  int val_per_class = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Desk-scale stand-in datasets with labels, features and splits.
///  balanced tree: node 0 is the root, children of i are b*i+1 .. b*i+b; the
///  label of a node is the root child whose subtree contains it (root: 0).
///  sbm: label is the block id.
/// Features are the label one-hot times `signal` plus N(0, noise^2) noise.
Graph make_synthetic(const SyntheticSpec& spec);

struct FileDataset {
  std::string edges;
  std::string features;
  std::string labels;  // optional
  std::string splits;  // optional
};

using DatasetSpec = std::variant<SyntheticSpec, FileDataset>;

/// Loads or generates the dataset; throws std::runtime_error on I/O or format problems.
Graph load_dataset(const DatasetSpec& spec);

struct EvalConfig {
  int steps = 500;
  double l2 = 1e-4;
};

struct ExperimentConfig {
  double curvature = 1.0;
  double lambda = 1.0;
  double temperature = 2.0;
  LossVariant variant = LossVariant::kHyperGcl;
  // Target Gaussian of the isotropy term: N(target_mean * 1, I_p).
  double target_mean = 0.0;
  double target_degraded_fraction = 0.0;
  AugmentationConfig view1{0.2, 0.1, 0};
  AugmentationConfig view2{0.2, 0.1, 0};
  int hidden_dim = 256;
  int out_dim = 64;
  double eps = kDefaultEps;
  double learning_rate = 1e-3;
  int steps = 500;
  double weight_decay = 0.0;
  int log_every = 10;
  std::uint64_t seed = 0;
  EvalConfig eval;
  DatasetSpec dataset = SyntheticSpec{};

  void validate() const;
  TangentTarget target() const;
};

struct TraceRecord {
  int step;
  double total;
  double align;
  double iso;
  double erank_ambient;
  double erank_tangent;
  double mean_norm;
};

struct TrainingTrace {
  std::vector<TraceRecord> records;

  void write_csv(std::ostream& os) const;
};

struct TrainResult {
  GcnParams params;
  TrainingTrace trace;
  Eigen::MatrixXd embeddings;  // clean-graph encoding after the last update
};

/// Raised when the loss or a gradient turns non-finite; carries the trace so far.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, TrainingTrace trace, int step)
      : std::runtime_error(what), trace_(std::move(trace)), step_(step) {}
  const TrainingTrace& trace() const { return trace_; }
  int step() const { return step_; }

 private:
  TrainingTrace trace_;
  int step_;
};

TrainResult train(const ExperimentConfig& cfg);
TrainResult train(const ExperimentConfig& cfg, const Graph& g);

/// Erank of the ambient embedding matrix and of its log0 image.
struct EmbeddingDiagnostics {
  double erank_ambient;
  double erank_tangent;
  double erank_covariance;  // eigenvalue spectrum of the tangent covariance
  double gaussian_kl;
  double mean_norm;
};
EmbeddingDiagnostics diagnose(const Eigen::MatrixXd& z, const Curvature& c);

/// Multinomial logistic regression on log0(z) trained on the train split,
/// accuracy on the test split.
double linear_eval(const Eigen::MatrixXd& z, const std::vector<int>& labels,
                   const Splits& splits, const Curvature& c, const EvalConfig& cfg = {});
/// Same probe on raw feature rows, without the log0 map.
double linear_eval_features(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                            const Splits& splits, const EvalConfig& cfg = {});

enum class SweepAxis { kCurvature, kGaussianMean, kGaussianIsotropy };
SweepAxis parse_sweep_axis(const std::string& name);
std::string_view to_string(SweepAxis a);

struct SweepRow {
  double value;
  double accuracy;  // mean over seeds
  double erank_ambient;
  double erank_tangent;
};

/// One train + eval per (value, seed); rows average over seeds. Runs execute on
/// up to `jobs` threads; results do not depend on the thread count.
std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, unsigned jobs = 1);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// Deterministic 64-bit mixing for derived seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace hypergcl
