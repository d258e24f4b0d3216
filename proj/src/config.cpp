#include "hypergcl/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace hypergcl {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + "expected an object");
  }

  void real(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + "expected an integer");
      out = v->get<int>();
    }
  }

  void seed(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      const bool ok = v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0);
      if (!ok) throw ConfigError(where(key) + "expected a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void text(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + "expected a string");
      out = v->get<std::string>();
    }
  }

  void int_list(const char* key, std::vector<int>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(where(key) + "expected an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(where(key) + "expected an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string child(const char* key) const { return path_ + key + "."; }

  /// Call after all known keys were read.
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + path_ + it.key() + "'");
    }
  }

 private:
  std::string where(const char* key = "") const {
    return "config key '" + path_ + key + "': ";
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_view(Reader& parent, const char* key, AugmentationConfig& view) {
  if (const json* v = parent.take(key)) {
    Reader r(*v, parent.child(key));
    r.real("edge_drop_prob", view.edge_drop_prob);
    r.real("node_drop_prob", view.node_drop_prob);
    r.finish();
  }
}

std::string resolve(const std::string& p, const std::string& base_dir) {
  if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

DatasetSpec read_dataset(const json& doc, const std::string& path, const std::string& base_dir) {
  Reader r(doc, path);
  std::string kind = "balanced_tree";
  r.text("kind", kind);
  if (kind == "files") {
    FileDataset f;
    r.text("edges", f.edges);
    r.text("features", f.features);
    r.text("labels", f.labels);
    r.text("splits", f.splits);
    r.finish();
    if (f.edges.empty() || f.features.empty()) {
      throw ConfigError("config key '" + path + "': file datasets need 'edges' and 'features'");
    }
    f.edges = resolve(f.edges, base_dir);
    f.features = resolve(f.features, base_dir);
    f.labels = resolve(f.labels, base_dir);
    f.splits = resolve(f.splits, base_dir);
    return f;
  }
  SyntheticSpec s;
  if (kind == "balanced_tree") {
    s.kind = SyntheticKind::kBalancedTree;
  } else if (kind == "sbm") {
    s.kind = SyntheticKind::kSbm;
  } else {
    throw ConfigError("config key '" + path + "kind': expected balanced_tree, sbm or files");
  }
  r.integer("branching", s.branching);
  r.integer("depth", s.depth);
  r.int_list("block_sizes", s.block_sizes);
  r.real("p_in", s.p_in);
  r.real("p_out", s.p_out);
  r.integer("feature_dim", s.feature_dim);
  r.real("signal", s.signal);
  r.real("noise", s.noise);
  r.integer("train_per_class", s.train_per_class);
  r.integer("val_per_class", s.val_per_class);
  r.seed("seed", s.seed);
  r.finish();
  return s;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  RunConfig out;
  ExperimentConfig& e = out.experiment;
  Reader r(doc, "");
  r.real("curvature", e.curvature);
  r.real("lambda", e.lambda);
  r.real("temperature", e.temperature);
  std::string variant(to_string(e.variant));
  r.text("variant", variant);
  try {
    e.variant = parse_variant(variant);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("config key 'variant': ") + err.what());
  }
  r.real("target_mean", e.target_mean);
  r.real("target_degraded_fraction", e.target_degraded_fraction);
  read_view(r, "view1", e.view1);
  read_view(r, "view2", e.view2);
  r.integer("hidden_dim", e.hidden_dim);
  r.integer("out_dim", e.out_dim);
  r.real("eps", e.eps);
  r.real("learning_rate", e.learning_rate);
  r.integer("steps", e.steps);
  r.real("weight_decay", e.weight_decay);
  r.integer("log_every", e.log_every);
  r.seed("seed", e.seed);
  if (const json* v = r.take("eval")) {
    Reader er(*v, "eval.");
    er.integer("steps", e.eval.steps);
    er.real("l2", e.eval.l2);
    er.finish();
  }
  if (const json* v = r.take("dataset")) e.dataset = read_dataset(*v, "dataset.", base_dir);
  r.text("out", out.out_dir);
  r.finish();
  try {
    e.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("invalid config: ") + err.what());
  }
  return out;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& err) {
    throw ConfigError(path + ": " + err.what());
  }
  return parse_run_config(doc, std::filesystem::path(path).parent_path().string());
}

json to_json(const RunConfig& cfg) {
  const ExperimentConfig& e = cfg.experiment;
  auto view = [](const AugmentationConfig& v) {
    return json{{"edge_drop_prob", v.edge_drop_prob}, {"node_drop_prob", v.node_drop_prob}};
  };
  json dataset;
  if (const auto* s = std::get_if<SyntheticSpec>(&e.dataset)) {
    dataset = {{"kind", s->kind == SyntheticKind::kBalancedTree ? "balanced_tree" : "sbm"},
               {"branching", s->branching},
               {"depth", s->depth},
               {"block_sizes", s->block_sizes},
               {"p_in", s->p_in},
               {"p_out", s->p_out},
               {"feature_dim", s->feature_dim},
               {"signal", s->signal},
               {"noise", s->noise},
               {"train_per_class", s->train_per_class},
               {"val_per_class", s->val_per_class},
               {"seed", s->seed}};
  } else {
    const auto& f = std::get<FileDataset>(e.dataset);
    dataset = {{"kind", "files"},
               {"edges", f.edges},
               {"features", f.features},
               {"labels", f.labels},
               {"splits", f.splits}};
  }
  return json{{"curvature", e.curvature},
              {"lambda", e.lambda},
              {"temperature", e.temperature},
              {"variant", std::string(to_string(e.variant))},
              {"target_mean", e.target_mean},
              {"target_degraded_fraction", e.target_degraded_fraction},
              {"view1", view(e.view1)},
              {"view2", view(e.view2)},
              {"hidden_dim", e.hidden_dim},
              {"out_dim", e.out_dim},
              {"eps", e.eps},
              {"learning_rate", e.learning_rate},
              {"steps", e.steps},
              {"weight_decay", e.weight_decay},
              {"log_every", e.log_every},
              {"seed", e.seed},
              {"eval", {{"steps", e.eval.steps}, {"l2", e.eval.l2}}},
              {"dataset", dataset},
              {"out", cfg.out_dir}};
}

}  // namespace hypergcl
