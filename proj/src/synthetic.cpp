#include <algorithm>
#include <random>
#include <stdexcept>

#include "hypergcl/trainer.hpp"

namespace hypergcl {

void SyntheticSpec::validate() const {
  if (kind == SyntheticKind::kBalancedTree) {
    if (branching < 2) throw std::invalid_argument("balanced_tree: branching must be >= 2");
    if (depth < 2) throw std::invalid_argument("balanced_tree: depth must be >= 2");
  } else {
    if (block_sizes.size() < 2) throw std::invalid_argument("sbm: need at least 2 blocks");
    for (int s : block_sizes) {
      if (s < 1) throw std::invalid_argument("sbm: block sizes must be positive");
    }
    if (!(p_in > p_out)) throw std::invalid_argument("sbm: p_in must exceed p_out");
    if (!(p_out >= 0.0 && p_in <= 1.0)) throw std::invalid_argument("sbm: probabilities in [0, 1]");
  }
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be positive");
  if (!(noise >= 0.0)) throw std::invalid_argument("noise must be nonnegative");
  if (train_per_class < 1 || val_per_class < 0) {
    throw std::invalid_argument("split sizes per class are invalid");
  }
}

Graph make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Graph g;
  std::vector<int> labels;
  int classes = 0;
  if (spec.kind == SyntheticKind::kBalancedTree) {
    long long count = 1, level = 1;
    for (int k = 0; k < spec.depth; ++k) {
      level *= spec.branching;
      count += level;
      if (count > 5'000'000) throw std::invalid_argument("balanced_tree is too large");
    }
    g.n = static_cast<int>(count);
    classes = spec.branching;
    labels.assign(static_cast<std::size_t>(g.n), 0);
    for (int i = 1; i < g.n; ++i) {
      const int parent = (i - 1) / spec.branching;
      g.edges.emplace_back(parent, i);
      labels[static_cast<std::size_t>(i)] =
          parent == 0 ? i - 1 : labels[static_cast<std::size_t>(parent)];
    }
  } else {
    for (std::size_t b = 0; b < spec.block_sizes.size(); ++b) {
      for (int k = 0; k < spec.block_sizes[b]; ++k) labels.push_back(static_cast<int>(b));
    }
    g.n = static_cast<int>(labels.size());
    classes = static_cast<int>(spec.block_sizes.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < g.n; ++i) {
      for (int j = i + 1; j < g.n; ++j) {
        const double p = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]
                             ? spec.p_in
                             : spec.p_out;
        if (unif(rng) < p) g.edges.emplace_back(i, j);
      }
    }
  }
  if (classes > spec.feature_dim) {
    throw std::invalid_argument("feature_dim must be at least the number of classes");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  g.features.resize(g.n, spec.feature_dim);
  for (int i = 0; i < g.n; ++i) {
    for (int k = 0; k < spec.feature_dim; ++k) g.features(i, k) = spec.noise * normal(rng);
    g.features(i, labels[static_cast<std::size_t>(i)]) += spec.signal;
  }

  Splits s;
  for (int cls = 0; cls < classes; ++cls) {
    std::vector<int> members;
    for (int i = 0; i < g.n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == cls) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = std::min<std::size_t>(members.size(), static_cast<std::size_t>(spec.train_per_class));
    const auto n_val =
        std::min<std::size_t>(members.size() - n_train, static_cast<std::size_t>(spec.val_per_class));
    for (std::size_t k = 0; k < members.size(); ++k) {
      auto& part = k < n_train ? s.train : (k < n_train + n_val ? s.val : s.test);
      part.push_back(members[k]);
    }
  }
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  g.labels = std::move(labels);
  g.splits = std::move(s);
  g.validate();
  return g;
}

}  // namespace hypergcl
