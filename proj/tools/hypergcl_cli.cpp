#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypergcl/config.hpp"
#include "hypergcl/density.hpp"
#include "hypergcl/trainer.hpp"
#include "hypergcl/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNonFinite = 3,
  kVerifyFailed = 4,
};

// Failure to create or write an output file.
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw OutputError("cannot create output directory " + dir.string());
  }
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw OutputError("cannot write " + path.string());
  body(os);
  os.flush();
  if (!os) throw OutputError("write failed for " + path.string());
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != cell.size()) throw hypergcl::ConfigError("not a number in list: '" + cell + "'");
    out.push_back(v);
  }
  if (out.empty()) throw hypergcl::ConfigError("empty value list");
  return out;
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

hypergcl::RunConfig resolve_config(const Common& a) {
  hypergcl::RunConfig cfg =
      a.config.empty() ? hypergcl::parse_run_config(json::object()) : hypergcl::load_run_config(a.config);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.seed) cfg.experiment.seed = *a.seed;
  return cfg;
}

int cmd_train(const Common& a) {
  const hypergcl::RunConfig cfg = resolve_config(a);
  const fs::path out(cfg.out_dir);
  ensure_dir(out);
  const json resolved = hypergcl::to_json(cfg);
  write_file(out / "resolved_config.json", [&](std::ostream& os) { os << resolved.dump(2) << '\n'; });
  std::cerr << "resolved config: " << resolved.dump() << '\n';

  hypergcl::Graph g;
  try {
    g = hypergcl::load_dataset(cfg.experiment.dataset);
  } catch (const std::exception& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kData;
  }
  try {
    const hypergcl::TrainResult r = hypergcl::train(cfg.experiment, g);
    write_file(out / "trace.csv", [&](std::ostream& os) { r.trace.write_csv(os); });
    write_file(out / "embeddings.csv",
               [&](std::ostream& os) { hypergcl::write_matrix_csv(os, r.embeddings); });
    const json params{{"theta1", matrix_json(r.params.theta1)},
                      {"theta2", matrix_json(r.params.theta2)},
                      {"bias1", matrix_json(r.params.bias1)},
                      {"bias2", matrix_json(r.params.bias2)},
                      {"slope1", r.params.slope1},
                      {"slope2", r.params.slope2}};
    write_file(out / "params.json", [&](std::ostream& os) { os << params.dump() << '\n'; });
  } catch (const hypergcl::TrainingDiverged& e) {
    write_file(out / "trace.csv", [&](std::ostream& os) { e.trace().write_csv(os); });
    const json diag{{"error", e.what()}, {"step", e.step()}};
    write_file(out / "diverged.json", [&](std::ostream& os) { os << diag.dump(2) << '\n'; });
    std::cerr << "training diverged at step " << e.step() << ": " << e.what() << '\n';
    return kNonFinite;
  }
  return kOk;
}

int cmd_eval(const Common& a, const std::string& embeddings) {
  const hypergcl::RunConfig cfg = resolve_config(a);
  hypergcl::Graph g;
  Eigen::MatrixXd z;
  try {
    g = hypergcl::load_dataset(cfg.experiment.dataset);
    z = hypergcl::read_matrix_csv(embeddings);
    if (!g.labels || !g.splits) throw std::runtime_error("dataset has no labels or splits");
    if (z.rows() != g.n) throw std::runtime_error("embedding rows do not match node count");
  } catch (const std::exception& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kData;
  }
  const hypergcl::Curvature c(cfg.experiment.curvature);
  double acc = 0.0;
  try {
    acc = hypergcl::linear_eval(z, *g.labels, *g.splits, c, cfg.experiment.eval);
  } catch (const std::invalid_argument& e) {
    std::cerr << "eval error: " << e.what() << '\n';
    return kData;
  }
  const json result{{"accuracy", acc}};
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_file(fs::path(a.out) / "eval.json", [&](std::ostream& os) { os << result.dump(2) << '\n'; });
  }
  std::cout << result.dump() << '\n';
  return kOk;
}

int cmd_diagnose(const std::string& embeddings, double curvature, const std::string& out) {
  Eigen::MatrixXd z;
  try {
    z = hypergcl::read_matrix_csv(embeddings);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kData;
  }
  const hypergcl::EmbeddingDiagnostics d = hypergcl::diagnose(z, hypergcl::Curvature(curvature));
  const json result{{"rows", z.rows()},
                    {"cols", z.cols()},
                    {"erank_ambient", d.erank_ambient},
                    {"erank_tangent", d.erank_tangent},
                    {"erank_covariance", d.erank_covariance},
                    {"gaussian_kl", d.gaussian_kl},
                    {"mean_norm", d.mean_norm}};
  if (!out.empty()) {
    write_file(out, [&](std::ostream& os) { os << result.dump(2) << '\n'; });
  }
  std::cout << result.dump() << '\n';
  return kOk;
}

int cmd_density(double sigma, double curvature, int dim, const std::string& out,
                std::size_t resolution, std::size_t radii) {
  if (dim != 1 && dim != 2) {
    std::cerr << "unsupported dimension " << dim << " (density supports d = 1 or 2)\n";
    return kUsage;
  }
  if (!(sigma > 0.0)) throw hypergcl::ConfigError("sigma must be positive");
  const auto spec = hypergcl::AmbientDensitySpec::isotropic(dim, sigma, hypergcl::Curvature(curvature));
  const double integral = hypergcl::integrate_density(spec, resolution);
  const auto profile = hypergcl::density_profile(spec, radii);
  if (!out.empty()) {
    write_file(out, [&](std::ostream& os) { hypergcl::write_profile_csv(os, profile); });
  }
  std::printf("integral %.6f\n", integral);
  return kOk;
}

int cmd_verify(const std::string& suite, const std::string& out, std::uint64_t seed,
               const std::string& mutate) {
  hypergcl::verify::Options opts;
  opts.seed = seed;
  if (mutate == "mobius_sign") {
    opts.mutation = hypergcl::verify::Mutation::kMobiusSign;
  } else if (!mutate.empty()) {
    throw hypergcl::ConfigError("unknown mutation: " + mutate);
  }
  const auto results = hypergcl::verify::run(suite, opts);
  for (const auto& r : results) {
    std::fprintf(stderr, "%s %s/%s worst=%.3g tol=%.3g (%.2fs)\n", r.passed ? "PASS" : "FAIL",
                 r.suite.c_str(), r.name.c_str(), r.worst, r.tolerance, r.seconds);
  }
  const json rep = hypergcl::verify::report(results);
  if (!out.empty()) {
    write_file(out, [&](std::ostream& os) { os << rep.dump(2) << '\n'; });
  }
  std::cout << rep.dump(2) << '\n';
  return hypergcl::verify::all_passed(results) ? kOk : kVerifyFailed;
}

int cmd_sweep(const Common& a, const std::string& axis_name, const std::string& values_text,
              const std::string& seeds_text, unsigned jobs) {
  const hypergcl::RunConfig cfg = resolve_config(a);
  const hypergcl::SweepAxis axis = hypergcl::parse_sweep_axis(axis_name);
  const std::vector<double> values = parse_values(values_text);
  std::vector<std::uint64_t> seeds;
  if (seeds_text.empty()) {
    seeds.push_back(cfg.experiment.seed);
  } else {
    for (double s : parse_values(seeds_text)) {
      if (s < 0 || s != std::floor(s)) throw hypergcl::ConfigError("seeds must be nonnegative integers");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  const fs::path out(cfg.out_dir);
  ensure_dir(out);
  json resolved = hypergcl::to_json(cfg);
  resolved["sweep"] = {{"axis", axis_name}, {"values", values}, {"seeds", seeds}};
  write_file(out / "resolved_config.json", [&](std::ostream& os) { os << resolved.dump(2) << '\n'; });
  try {
    hypergcl::load_dataset(cfg.experiment.dataset);
  } catch (const std::exception& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return kData;
  }
  std::vector<hypergcl::SweepRow> rows;
  try {
    rows = hypergcl::sweep(cfg.experiment, axis, values, seeds, jobs);
  } catch (const hypergcl::TrainingDiverged& e) {
    std::cerr << "training diverged at step " << e.step() << ": " << e.what() << '\n';
    return kNonFinite;
  }
  write_file(out / "sweep.csv", [&](std::ostream& os) { hypergcl::write_sweep_csv(os, rows); });
  hypergcl::write_sweep_csv(std::cout, rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic graph contrastive learning toolkit"};
  app.require_subcommand(1);

  Common common;
  std::uint64_t seed_value = 0;
  auto add_common = [&](CLI::App* sub, bool with_config) {
    if (with_config) sub->add_option("--config", common.config, "JSON config file");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", seed_value, "override the experiment seed");
  };

  auto* train = app.add_subcommand("train", "train an encoder and write trace, embeddings, params");
  add_common(train, true);

  std::string embeddings;
  auto* eval = app.add_subcommand("eval", "linear evaluation of saved embeddings");
  add_common(eval, true);
  eval->add_option("--embeddings", embeddings, "embeddings CSV")->required();

  double curvature = 1.0;
  std::string diag_out;
  auto* diag = app.add_subcommand("diagnose", "effective ranks of saved embeddings");
  diag->add_option("--embeddings", embeddings, "embeddings CSV")->required();
  diag->add_option("--curvature", curvature, "ball curvature c")->capture_default_str();
  diag->add_option("--out", diag_out, "JSON output file");

  double sigma = 1.0;
  int dim = 2;
  std::size_t resolution = hypergcl::kDefaultResolution;
  std::size_t radii = 256;
  std::string density_out;
  auto* density = app.add_subcommand("density", "analytic pushforward density profile and integral");
  density->add_option("--sigma", sigma, "tangent-plane standard deviation")->capture_default_str();
  density->add_option("--curvature", curvature, "ball curvature c")->capture_default_str();
  density->add_option("--dim", dim, "dimension (1 or 2)")->capture_default_str();
  density->add_option("--resolution", resolution, "quadrature cells per axis")->capture_default_str();
  density->add_option("--radii", radii, "profile sample count")->capture_default_str();
  density->add_option("--out", density_out, "CSV output file");

  std::string suite = "all";
  std::string verify_out;
  std::string mutate;
  auto* verify = app.add_subcommand("verify", "run property suites");
  verify->add_option("--suite", suite, "geometry, autodiff, density, spectral or all")
      ->capture_default_str();
  verify->add_option("--out", verify_out, "JSON report file");
  verify->add_option("--seed", seed_value, "sampling seed");
  verify->add_option("--mutate", mutate)->group("");

  std::string axis, values, seeds;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "train and evaluate across one axis");
  add_common(sweep, true);
  sweep->add_option("--axis", axis, "curvature, gaussian_mean or gaussian_isotropy")->required();
  sweep->add_option("--values", values, "comma-separated axis values")->required();
  sweep->add_option("--seeds", seeds, "comma-separated seeds averaged per value");
  sweep->add_option("--jobs", jobs, "parallel runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  for (auto* sub : {train, eval, sweep}) {
    if (sub->parsed() && sub->count("--seed") > 0) common.seed = seed_value;
  }

  try {
    if (train->parsed()) return cmd_train(common);
    if (eval->parsed()) return cmd_eval(common, embeddings);
    if (diag->parsed()) return cmd_diagnose(embeddings, curvature, diag_out);
    if (density->parsed()) return cmd_density(sigma, curvature, dim, density_out, resolution, radii);
    if (verify->parsed()) return cmd_verify(suite, verify_out, seed_value, mutate);
    if (sweep->parsed()) return cmd_sweep(common, axis, values, seeds, jobs);
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kData;
  } catch (const hypergcl::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kData;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
