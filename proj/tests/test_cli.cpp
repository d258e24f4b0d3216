#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "hypergcl_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = std::string("\"") + HYPERGCL_CLI + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

fs::path write_config(const std::string& name, const json& doc) {
  fs::path p = workdir() / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

json small_config() {
  return {{"out_dim", 8},
          {"hidden_dim", 32},
          {"steps", 20},
          {"learning_rate", 0.01},
          {"dataset",
           {{"kind", "sbm"}, {"block_sizes", {20, 20}}, {"p_in", 0.3}, {"p_out", 0.02}, {"train_per_class", 5}, {"val_per_class", 5}}}};
}

}  // namespace

TEST_CASE("train writes outputs and reruns byte for byte") {
  auto cfg = write_config("small.json", small_config());
  const fs::path a = workdir() / "run_a", b = workdir() / "run_b";
  Run r = run("train --config \"" + cfg.string() + "\" --out \"" + a.string() + "\"");
  REQUIRE(r.code == 0);
  for (const char* f : {"trace.csv", "embeddings.csv", "params.json", "resolved_config.json"}) {
    CHECK(fs::exists(a / f));
  }
  json resolved = json::parse(slurp(a / "resolved_config.json"));
  CHECK(resolved["temperature"] == 2.0);
  CHECK(resolved["steps"] == 20);
  CHECK(resolved["out"] == a.string());
  CHECK(r.err.find("resolved config:") != std::string::npos);

  REQUIRE(run("train --config \"" + cfg.string() + "\" --out \"" + b.string() + "\"").code == 0);
  for (const char* f : {"trace.csv", "embeddings.csv", "params.json", "resolved_config.json"}) {
    if (std::string(f) == "resolved_config.json") continue;  // records its own output path
    INFO(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }

  const fs::path c = workdir() / "run_c";
  REQUIRE(run("train --config \"" + cfg.string() + "\" --out \"" + c.string() + "\" --seed 5").code == 0);
  CHECK(slurp(a / "embeddings.csv") != slurp(c / "embeddings.csv"));
  CHECK(json::parse(slurp(c / "resolved_config.json"))["seed"] == 5);

  Run d = run("diagnose --embeddings \"" + (a / "embeddings.csv").string() + "\"");
  REQUIRE(d.code == 0);
  json diag = json::parse(d.out);
  CHECK(diag["rows"] == 40);
  CHECK(diag.contains("erank_ambient"));
  CHECK(diag.contains("erank_tangent"));

  Run e = run("eval --config \"" + cfg.string() + "\" --embeddings \"" + (a / "embeddings.csv").string() + "\"");
  REQUIRE(e.code == 0);
  const double acc = json::parse(e.out)["accuracy"];
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("train error exit codes") {
  json typo = small_config();
  typo["lamda"] = 1.0;
  Run r = run("train --config \"" + write_config("typo.json", typo).string() + "\" --out \"" +
              (workdir() / "typo").string() + "\"");
  CHECK(r.code == 1);
  CHECK(r.err.find("lamda") != std::string::npos);

  std::ofstream(workdir() / "blocker") << "file";
  Run u = run("train --config \"" + write_config("ok.json", small_config()).string() + "\" --out \"" +
              (workdir() / "blocker" / "sub").string() + "\"");
  CHECK(u.code == 2);

  json files = small_config();
  files["dataset"] = {{"kind", "files"}, {"edges", "missing_edges.txt"}, {"features", "missing.csv"}};
  Run m = run("train --config \"" + write_config("files.json", files).string() + "\" --out \"" +
              (workdir() / "files").string() + "\"");
  CHECK(m.code == 2);

  json wild = small_config();
  wild["learning_rate"] = 1e300;
  const fs::path out = workdir() / "wild";
  Run w = run("train --config \"" + write_config("wild.json", wild).string() + "\" --out \"" + out.string() + "\"");
  CHECK(w.code == 3);
  CHECK(fs::exists(out / "diverged.json"));
  CHECK(fs::exists(out / "trace.csv"));

  CHECK(run("train --config \"" + (workdir() / "nope.json").string() + "\"").code == 1);
  CHECK(run("frobnicate").code == 1);
}

TEST_CASE("train on a file dataset") {
  const fs::path data = HYPERGCL_TEST_DATA;
  json cfg = small_config();
  cfg["dataset"] = {{"kind", "files"},
                    {"edges", (data / "tiny/edges.txt").string()},
                    {"features", (data / "tiny/features.csv").string()},
                    {"labels", (data / "tiny/labels.csv").string()},
                    {"splits", (data / "tiny/splits.json").string()}};
  auto path = write_config("tiny.json", cfg);
  const fs::path out = workdir() / "tiny";
  REQUIRE(run("train --config \"" + path.string() + "\" --out \"" + out.string() + "\"").code == 0);
  Run e = run("eval --config \"" + path.string() + "\" --embeddings \"" + (out / "embeddings.csv").string() + "\"");
  CHECK(e.code == 0);
}

TEST_CASE("density command") {
  const fs::path csv = workdir() / "profile.csv";
  Run r = run("density --sigma 1 --curvature 1 --dim 1 --out \"" + csv.string() + "\"");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("integral 1.000", 0) == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("radius,density\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 257);
  CHECK(run("density --dim 3").code == 1);
  CHECK(run("density --sigma -1").code == 1);
  CHECK(run("density --out \"" + (workdir() / "blocker" / "x.csv").string() + "\"").code == 2);
  Run again = run("density --sigma 1 --curvature 1 --dim 1 --out \"" + (workdir() / "profile2.csv").string() + "\"");
  CHECK(slurp(workdir() / "profile2.csv") == text);
  CHECK(again.out == r.out);
}

TEST_CASE("verify command") {
  Run ok = run("verify --suite geometry");
  CHECK(ok.code == 0);
  json rep = json::parse(ok.out);
  CHECK(rep["passed"] == true);
  CHECK(ok.err.find("PASS geometry/mobius_left_cancellation") != std::string::npos);
  Run again = run("verify --suite geometry");
  CHECK(again.out == ok.out);

  Run bad = run("verify --suite geometry --mutate mobius_sign");
  CHECK(bad.code == 4);
  CHECK(bad.err.find("FAIL geometry/mobius_left_cancellation") != std::string::npos);
  CHECK(json::parse(bad.out)["passed"] == false);
  CHECK(run("verify --suite topology").code == 1);
}

TEST_CASE("sweep command is independent of the job count") {
  json cfg = small_config();
  cfg["steps"] = 10;
  auto path = write_config("sweep.json", cfg);
  const fs::path a = workdir() / "sweep_a", b = workdir() / "sweep_b";
  const std::string common = "sweep --config \"" + path.string() + "\" --axis gaussian_isotropy --values 0,0.5 --seeds 0,1";
  REQUIRE(run(common + " --jobs 1 --out \"" + a.string() + "\"").code == 0);
  REQUIRE(run(common + " --jobs 4 --out \"" + b.string() + "\"").code == 0);
  CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
  CHECK(slurp(a / "sweep.csv").rfind("value,accuracy,erank_ambient,erank_tangent\n", 0) == 0);
  json resolved = json::parse(slurp(a / "resolved_config.json"));
  CHECK(resolved["sweep"]["axis"] == "gaussian_isotropy");
  CHECK(run("sweep --config \"" + path.string() + "\" --axis depth --values 1").code == 1);
  CHECK(run("sweep --config \"" + path.string() + "\" --axis curvature --values 1,x").code == 1);
}
