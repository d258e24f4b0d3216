#include "hypergcl/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "hypergcl/batch_geometry.hpp"
#include "hypergcl/spectral.hpp"

namespace hypergcl {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 over a combined word.
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void ExperimentConfig::validate() const {
  Curvature{curvature};
  LossWeights{lambda, temperature};
  view1.validate();
  view2.validate();
  if (hidden_dim < 1 || out_dim < 1) throw std::invalid_argument("encoder dims must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be nonnegative");
  if (log_every < 1) throw std::invalid_argument("log_every must be positive");
  if (!(target_degraded_fraction >= 0.0 && target_degraded_fraction <= 1.0)) {
    throw std::invalid_argument("target_degraded_fraction must lie in [0, 1]");
  }
  if (!std::isfinite(target_mean)) throw std::invalid_argument("target_mean must be finite");
  if (eval.steps < 1 || !(eval.l2 >= 0.0)) throw std::invalid_argument("invalid eval settings");
  if (const auto* s = std::get_if<SyntheticSpec>(&dataset)) s->validate();
}

TangentTarget ExperimentConfig::target() const {
  if (target_mean == 0.0 && target_degraded_fraction == 0.0) {
    return TangentTarget::standard(out_dim);
  }
  return TangentTarget::shifted_degraded(out_dim, target_mean, target_degraded_fraction,
                                         mix_seed(seed, 0x7A46));
}

Graph load_dataset(const DatasetSpec& spec) {
  if (const auto* s = std::get_if<SyntheticSpec>(&spec)) return make_synthetic(*s);
  const auto& f = std::get<FileDataset>(spec);
  Graph g;
  g.features = read_features_csv(f.features);
  g.n = static_cast<int>(g.features.rows());
  g.edges = read_edge_list(f.edges);
  if (!f.labels.empty()) g.labels = read_labels_csv(f.labels, g.n);
  if (!f.splits.empty()) g.splits = read_splits_json(f.splits);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("dataset: ") + e.what());
  }
  return g;
}

void TrainingTrace::write_csv(std::ostream& os) const {
  os << "step,total,align,iso,erank_ambient,erank_tangent,mean_norm\n";
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.total,
                  r.align, r.iso, r.erank_ambient, r.erank_tangent, r.mean_norm);
    os << buf;
  }
}

EmbeddingDiagnostics diagnose(const Eigen::MatrixXd& z, const Curvature& c) {
  EmbeddingDiagnostics d{0.0, 0.0, 0.0, 0.0, 0.0};
  if (z.rows() == 0) throw std::invalid_argument("diagnose: empty embedding matrix");
  d.mean_norm = z.rowwise().norm().mean();
  Eigen::MatrixXd y(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (!(c.value() * z.row(i).squaredNorm() < 1.0)) {
      throw std::domain_error("diagnose: embedding row outside the ball");
    }
    y.row(i) = poincare::log0(Eigen::VectorXd(z.row(i).transpose()), c.value()).transpose();
  }
  if (z.cwiseAbs().maxCoeff() > 0.0) {
    d.erank_ambient = effective_rank(z);
    d.erank_tangent = effective_rank(y);
  }
  if (z.rows() >= 2) {
    const CovarianceSummary s = tangent_moments(z, c);
    if (s.sigma.cwiseAbs().maxCoeff() > 0.0) d.erank_covariance = covariance_effective_rank(s.sigma);
    d.gaussian_kl = gaussian_kl(s);
  }
  return d;
}

namespace {

struct Adam {
  Eigen::MatrixXd m, v;
  void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& g, double lr, int t) {
    constexpr double b1 = 0.9, b2 = 0.999, e = 1e-8;
    if (m.size() == 0) {
      m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
      v = m;
    }
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + e);
  }
};

}  // namespace

TrainResult train(const ExperimentConfig& cfg) {
  cfg.validate();
  return train(cfg, load_dataset(cfg.dataset));
}

TrainResult train(const ExperimentConfig& cfg, const Graph& g) {
  cfg.validate();
  g.validate();
  const Curvature c(cfg.curvature);
  const LossWeights weights(cfg.lambda, cfg.temperature);
  const TangentTarget target = cfg.target();
  const auto adj_clean = normalize_adjacency(g);

  TrainResult res;
  res.params = GcnParams::init(g.features.cols(), cfg.hidden_dim, cfg.out_dim,
                               mix_seed(cfg.seed, 0x1417));
  Adam opt_t1, opt_t2, opt_b1, opt_b2, opt_s1, opt_s2;
  ad::Tape tape;

  for (int step = 0; step < cfg.steps; ++step) {
    AugmentationConfig a1 = cfg.view1, a2 = cfg.view2;
    a1.seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(step)), 1);
    a2.seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(step)), 2);
    const Graph v1 = augment(g, a1);
    const Graph v2 = augment(g, a2);

    tape.reset();
    GcnVars vars;
    losses::LossTerms terms;
    try {
      vars = GcnVars::on(tape, res.params);
      ad::Var z1 = encode(normalize_adjacency(v1), tape.constant(v1.features), vars, c, cfg.eps);
      ad::Var z2 = encode(normalize_adjacency(v2), tape.constant(v2.features), vars, c, cfg.eps);
      terms = losses::total_loss(z1, z2, weights, c, cfg.variant, target);
      tape.backward(terms.total);
    } catch (const ad::NonFiniteError& e) {
      throw TrainingDiverged(std::string("non-finite loss: ") + e.what(), res.trace, step);
    } catch (const std::domain_error& e) {
      throw TrainingDiverged(std::string("numerical failure: ") + e.what(), res.trace, step);
    }

    if (step % cfg.log_every == 0 || step == cfg.steps - 1) {
      ad::Tape eval_tape;
      const GcnVars ev = GcnVars::on(eval_tape, res.params);
      const Eigen::MatrixXd z =
          encode(adj_clean, eval_tape.constant(g.features), ev, c, cfg.eps).value();
      const EmbeddingDiagnostics d = diagnose(z, c);
      res.trace.records.push_back({step, terms.total.scalar(), terms.align.scalar(),
                                   terms.regularizer.scalar(), d.erank_ambient, d.erank_tangent,
                                   d.mean_norm});
    }

    const int t = step + 1;
    Eigen::MatrixXd g1 = vars.theta1.grad();
    Eigen::MatrixXd g2 = vars.theta2.grad();
    if (cfg.weight_decay > 0.0) {
      g1 += cfg.weight_decay * res.params.theta1;
      g2 += cfg.weight_decay * res.params.theta2;
    }
    opt_t1.step(res.params.theta1, g1, cfg.learning_rate, t);
    opt_t2.step(res.params.theta2, g2, cfg.learning_rate, t);
    Eigen::MatrixXd b1 = res.params.bias1, b2 = res.params.bias2;
    opt_b1.step(b1, vars.bias1.grad(), cfg.learning_rate, t);
    opt_b2.step(b2, vars.bias2.grad(), cfg.learning_rate, t);
    res.params.bias1 = b1;
    res.params.bias2 = b2;
    Eigen::MatrixXd s1 = Eigen::MatrixXd::Constant(1, 1, res.params.slope1);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Constant(1, 1, res.params.slope2);
    opt_s1.step(s1, vars.slope1.grad(), cfg.learning_rate, t);
    opt_s2.step(s2, vars.slope2.grad(), cfg.learning_rate, t);
    res.params.slope1 = s1(0, 0);
    res.params.slope2 = s2(0, 0);
    if (!res.params.theta1.allFinite() || !res.params.theta2.allFinite()) {
      throw TrainingDiverged("non-finite parameters after update", res.trace, step);
    }
  }
  res.embeddings = encode(g, res.params, c, cfg.eps);
  return res;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "curvature") return SweepAxis::kCurvature;
  if (name == "gaussian_mean") return SweepAxis::kGaussianMean;
  if (name == "gaussian_isotropy") return SweepAxis::kGaussianIsotropy;
  throw std::invalid_argument("unknown sweep axis: " + name);
}

std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kCurvature: return "curvature";
    case SweepAxis::kGaussianMean: return "gaussian_mean";
    case SweepAxis::kGaussianIsotropy: return "gaussian_isotropy";
  }
  return "unknown";
}

std::vector<SweepRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                            const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, unsigned jobs) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
  base.validate();
  const Graph g = load_dataset(base.dataset);
  if (!g.labels || !g.splits) throw std::invalid_argument("sweep needs labels and splits");

  struct Job {
    ExperimentConfig cfg;
    double acc = 0.0, erank_a = 0.0, erank_t = 0.0;
  };
  std::vector<Job> work;
  for (double v : values) {
    for (std::uint64_t s : seeds) {
      ExperimentConfig cfg = base;
      cfg.seed = s;
      switch (axis) {
        case SweepAxis::kCurvature: cfg.curvature = v; break;
        case SweepAxis::kGaussianMean: cfg.target_mean = v; break;
        case SweepAxis::kGaussianIsotropy: cfg.target_degraded_fraction = v; break;
      }
      cfg.validate();
      work.push_back({cfg});
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    for (std::size_t i = next++; i < work.size() && !failed; i = next++) {
      try {
        Job& job = work[i];
        const TrainResult r = train(job.cfg, g);
        const Curvature c(job.cfg.curvature);
        const EmbeddingDiagnostics d = diagnose(r.embeddings, c);
        job.acc = linear_eval(r.embeddings, *g.labels, *g.splits, c, job.cfg.eval);
        job.erank_a = d.erank_ambient;
        job.erank_t = d.erank_tangent;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<SweepRow> rows;
  const auto ns = static_cast<double>(seeds.size());
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    SweepRow row{values[vi], 0.0, 0.0, 0.0};
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const Job& job = work[vi * seeds.size() + si];
      row.accuracy += job.acc / ns;
      row.erank_ambient += job.erank_a / ns;
      row.erank_tangent += job.erank_t / ns;
    }
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "value,accuracy,erank_ambient,erank_tangent\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.value, r.accuracy,
                  r.erank_ambient, r.erank_tangent);
    os << buf;
  }
}

}  // namespace hypergcl
