#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Sandbox {
 public:
  explicit Sandbox(const std::string& name)
      : root_(fs::temp_directory_path() / ("klsgd_cli_" + name)) {
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Sandbox() { fs::remove_all(root_); }

  fs::path path(const std::string& rel) const { return root_ / rel; }

  fs::path write(const std::string& rel, const std::string& text) const {
    std::ofstream(path(rel)) << text;
    return path(rel);
  }

  Result run(const std::string& args) const {
    const auto out = path("stdout.txt");
    const auto err = path("stderr.txt");
    const std::string cmd = std::string(KLSGD_CLI) + " " + args + " > " + out.string() + " 2> " +
                            err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
  }

 private:
  fs::path root_;
};

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

const char* kQuadratic = R"(problem:
  id: quadratic
  dimension: 2
  beta: 1
scheme:
  horizon: 100
  step: 0.1
oracle:
  sigma: 0.5
)";

const char* kCircle = R"(problem:
  id: circle_quartic
scheme:
  horizon: 400
  seeds: 6
  step: 0.05
oracle:
  sigma: power(0.5, 1)
)";

}  // namespace

TEST_CASE("run writes one CSV with K + 1 rows per seed") {
  Sandbox box("run");
  const auto cfg = box.write("q.yaml", kQuadratic);
  const auto r = box.run("run --config " + cfg.string() + " --out " + box.path("out").string());
  REQUIRE(r.code == 0);
  const auto csv = slurp(box.path("out/run_0.csv"));
  CHECK(line_count(csv) == 102);
  CHECK(csv.rfind("k,x_0,x_1,F,grad_norm,step_norm,dist_crit,w_k,p_k,L_k\n", 0) == 0);
  const auto meta = nlohmann::json::parse(slurp(box.path("out/run_0.json")));
  CHECK(meta["config_hash"].get<std::string>().size() == 16);
  CHECK(meta["horizon"] == 100);
  CHECK(meta["diverged"] == false);
  CHECK(meta["coefficients"] == true);
}

TEST_CASE("re-running produces identical bytes at any thread count") {
  Sandbox box("determinism");
  const auto cfg = box.write("c.yaml", kCircle);
  REQUIRE(box.run("run --config " + cfg.string() + " --out " + box.path("a").string()).code == 0);
  REQUIRE(box.run("run --config " + cfg.string() + " --out " + box.path("b").string() +
                  " --threads 3").code == 0);
  for (int seed = 0; seed < 6; ++seed) {
    for (const char* ext : {".csv", ".json"}) {
      const std::string name = "run_" + std::to_string(seed) + ext;
      CHECK(slurp(box.path("a/" + name)) == slurp(box.path("b/" + name)));
    }
  }
  CHECK(slurp(box.path("a/run_0.csv")) != slurp(box.path("a/run_1.csv")));
}

TEST_CASE("seed flag overrides the configuration") {
  Sandbox box("seeds");
  const auto cfg = box.write("q.yaml", kQuadratic);
  REQUIRE(box.run("run --config " + cfg.string() + " --out " + box.path("o").string() +
                  " --seeds 4,9").code == 0);
  CHECK(fs::exists(box.path("o/run_4.csv")));
  CHECK(fs::exists(box.path("o/run_9.csv")));
  CHECK_FALSE(fs::exists(box.path("o/run_0.csv")));
  CHECK(box.run("run --config " + cfg.string() + " --seeds 1,1").code == 2);
}

TEST_CASE("invalid configuration exits 2 with one error line") {
  Sandbox box("invalid");
  const auto cfg = box.write("bad.yaml", "problem:\n  id: banana\n");
  const auto r = box.run("run --config " + cfg.string());
  CHECK(r.code == 2);
  CHECK(line_count(r.err) == 1);
  CHECK(r.err.rfind("error: " + cfg.string() + ":2: ", 0) == 0);
  CHECK(r.err.find("problem.id") != std::string::npos);
  const auto missing = box.run("run --config " + box.path("none.yaml").string());
  CHECK(missing.code == 2);
  CHECK(missing.err.rfind("error: ", 0) == 0);
  const auto usage = box.run("run");
  CHECK(usage.code == 2);
  CHECK(usage.err.rfind("error: ", 0) == 0);
  CHECK(line_count(usage.err) == 1);
  CHECK(box.run("bogus").code == 2);
}

TEST_CASE("divergence is a flagged record, not an error") {
  Sandbox box("diverge");
  const auto cfg = box.write("d.yaml", "problem:\n  id: quadratic\nscheme:\n  horizon: 100\n  step: 3\n");
  const auto r = box.run("run --config " + cfg.string() + " --out " + box.path("o").string());
  CHECK(r.code == 0);
  const auto meta = nlohmann::json::parse(slurp(box.path("o/run_0.json")));
  CHECK(meta["diverged"] == true);
}

TEST_CASE("certify passes the strong-growth replica below the step threshold") {
  Sandbox box("certify_pass");
  const auto cfg = box.write("s.yaml", R"(problem:
  id: quadratic
  beta: 1
scheme:
  horizon: 200
  step: 0.5
oracle:
  kind: multiplicative
  b: 2
certifier:
  samples: 4000
  points: [[1, 0], [0.5, -2]]
)");
  const auto r = box.run("certify --config " + cfg.string() + " --out " + box.path("o").string());
  CHECK(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(box.path("o/certificate.json")));
  CHECK(report["summary"]["fail"] == 0);
  for (const auto& e : report["entries"]) {
    INFO(e.dump());
    CHECK(e["verdict"] == "pass");
  }
  CHECK(report.contains("monitors"));
}

TEST_CASE("certify fails above the step threshold") {
  Sandbox box("certify_fail");
  const auto cfg = box.write("s.yaml", R"(problem:
  id: quadratic
  beta: 1
scheme:
  horizon: 50
  step: 1.5
oracle:
  kind: multiplicative
  b: 2
certifier:
  samples: 2000
)");
  const auto r = box.run("certify --config " + cfg.string() + " --out " + box.path("o").string());
  CHECK(r.code == 1);
  const auto report = nlohmann::json::parse(slurp(box.path("o/certificate.json")));
  bool inf_v_failed = false;
  for (const auto& e : report["entries"]) {
    if (e["check"] == "inf_v" && e["verdict"] == "fail") inf_v_failed = true;
  }
  CHECK(inf_v_failed);
}

TEST_CASE("certify a small-step forward-backward configuration") {
  Sandbox box("certify_prox");
  const auto cfg = box.write("p.yaml", R"(problem:
  id: composite_quartic_quadratic
  dimension: 2
  mu_h: 1
  z0: [1, 1]
  x0: [1.5, 0.5]
scheme:
  id: prox_gradient
  horizon: 100
  gamma: 0.005
  lambda: 1
oracle:
  sigma: 0
prox:
  kind: exact
certifier:
  samples: 1000
)");
  const auto r = box.run("certify --config " + cfg.string() + " --out " + box.path("o").string());
  CHECK(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(box.path("o/certificate.json")));
  for (const auto& e : report["entries"]) {
    if (e["check"] == "contraction") CHECK(e["verdict"] == "pass");
  }
  CHECK(report["summary"]["fail"] == 0);
}

TEST_CASE("certify needs a certifier section") {
  Sandbox box("certify_missing");
  const auto cfg = box.write("q.yaml", kQuadratic);
  const auto r = box.run("certify --config " + cfg.string() + " --out " + box.path("o").string());
  CHECK(r.code == 2);
  CHECK(r.err.find("certifier") != std::string::npos);
}

TEST_CASE("kl-check on the circle with default and undersized constants") {
  Sandbox box("kl");
  const std::string base = "problem:\n  id: circle_quartic\ncertifier:\n  kl_theta: 0.5\n  kl_epsilon: 0.2\n"
                           "  kl_zeta: 0.1\n  kl_samples: 2000\n";
  const auto good = box.write("good.yaml", base + "  kl_c: 2\n");
  const auto r = box.run("kl-check --config " + good.string() + " --out " + box.path("g").string());
  CHECK(r.code == 0);
  const auto report = nlohmann::json::parse(slurp(box.path("g/kl_report.json")));
  CHECK(report["total_violated"] == 0);
  CHECK(report["component_count"] == 2);
  CHECK(report["merged"]["single_component"] == false);
  const auto bad = box.write("bad.yaml", base + "  kl_c: 0.1\n");
  const auto rb = box.run("kl-check --config " + bad.string() + " --out " + box.path("b").string());
  CHECK(rb.code == 1);
  const auto bad_report = nlohmann::json::parse(slurp(box.path("b/kl_report.json")));
  CHECK(bad_report["total_violated"].get<int>() > 0);
  CHECK(bad_report["min_margin"].get<double>() < 0.0);
}

TEST_CASE("kl-check on a single-component problem") {
  Sandbox box("kl_single");
  const auto cfg = box.write("q.yaml", "problem:\n  id: quadratic\ncertifier:\n  kl_samples: 200\n");
  CHECK(box.run("kl-check --config " + cfg.string() + " --out " + box.path("o").string()).code == 0);
  const auto report = nlohmann::json::parse(slurp(box.path("o/kl_report.json")));
  CHECK(report["component_count"] == 1);
  CHECK(report["merged"]["single_component"] == true);
}

TEST_CASE("report groups runs by horizon") {
  Sandbox box("report");
  const auto cfg = box.write("c.yaml", kCircle);
  REQUIRE(box.run("run --config " + cfg.string() + " --out " + box.path("runs").string()).code == 0);
  const auto shorter = box.write("s.yaml", std::string(kCircle) + "");
  std::string text = kCircle;
  text.replace(text.find("horizon: 400"), 12, "horizon: 100");
  text.replace(text.find("seeds: 6"), 8, "seeds: 10,11");
  const auto mixed = box.write("m.yaml", text);
  REQUIRE(box.run("run --config " + mixed.string() + " --out " + box.path("runs").string()).code == 0);
  const auto r = box.run("report " + box.path("runs").string());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("horizon 100: runs 2") != std::string::npos);
  CHECK(r.out.find("horizon 400: runs 6") != std::string::npos);
  const auto summary = nlohmann::json::parse(slurp(box.path("runs/summary.json")));
  CHECK(summary["groups"].size() == 2);
  const double fraction = summary["groups"][0]["summary"]["success_fraction"].get<double>();
  CHECK(fraction >= 0.0);
  CHECK(fraction <= 1.0);
}

TEST_CASE("report on an empty directory exits 2") {
  Sandbox box("report_empty");
  fs::create_directories(box.path("empty"));
  const auto r = box.run("report " + box.path("empty").string());
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: ", 0) == 0);
}
