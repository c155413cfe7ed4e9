#include <catch2/catch_amalgamated.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "spde/io.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const std::string& capture = "") {
  std::string cmd = std::string(SPDE_HOLDER_BIN) + " " + args;
  if (!capture.empty()) cmd += " >" + capture + " 2>" + capture + ".err";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_config(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

const char* kSmallEnsemble = R"({
  "study": "ensemble",
  "d": 1, "nx": 17, "dt": 0.03125,
  "operator": {"preset": "laplacian"},
  "forcing": {"kind": "constant-one"},
  "windows": [0, 1],
  "samples": 100,
  "k_list": [1, 2],
  "thetas": [0.25],
  "seed": 7,
  "dump_fields": 2
})";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  TempDir dir("cli_usage");
  CHECK(run("", dir / "log") == 1);
  CHECK(run("simulate", dir / "log") == 1);  // --config required
  CHECK(run("frobnicate", dir / "log") == 1);
}

TEST_CASE("validation errors exit with code 2 and emit JSON on stderr") {
  TempDir dir("cli_validation");
  write_config(dir / "bad.json", R"({"nx": 100})");
  CHECK(run("simulate --config " + (dir / "bad.json") + " --out " + (dir / "out"),
            dir / "log") == 2);
  const std::string err = spde::read_file(dir / "log.err");
  CHECK(err.find("\"error\"") != std::string::npos);
  CHECK(err.find("validation") != std::string::npos);
}

TEST_CASE("report before simulate reports a missing ensemble") {
  TempDir dir("cli_missing");
  CHECK(run("report --out " + (dir / "empty"), dir / "log") == 2);
  const std::string err = spde::read_file(dir / "log.err");
  CHECK(err.find("missing ensemble") != std::string::npos);
}

TEST_CASE("simulate, analyze and report produce a full artifact chain") {
  TempDir dir("cli_chain");
  write_config(dir / "cfg.json", kSmallEnsemble);
  REQUIRE(run("simulate --config " + (dir / "cfg.json") + " --out " + (dir / "out"),
              dir / "log") == 0);
  CHECK(fs::exists(dir / "out/manifest.json"));
  CHECK(fs::exists(dir / "out/ensemble.csv"));
  CHECK(fs::exists(dir / "out/moments.csv"));
  CHECK(fs::exists(dir / "out/fields/sample_0.bin"));
  CHECK(fs::exists(dir / "out/fields/sample_1.json"));

  // outputs embed the resolved config and seed
  const std::string manifest = spde::read_file(dir / "out/manifest.json");
  CHECK(manifest.find("\"seed\": 7") != std::string::npos);
  CHECK(manifest.find("\"kind\": \"constant-one\"") != std::string::npos);

  REQUIRE(run("analyze --config " + (dir / "cfg.json") + " --out " + (dir / "out"),
              dir / "log") == 0);
  CHECK(fs::exists(dir / "out/analysis.csv"));

  REQUIRE(run("report --out " + (dir / "out"), dir / "log") == 0);
  CHECK(fs::exists(dir / "out/report.json"));
  CHECK(fs::exists(dir / "out/moments_vs_T.csv"));
}

TEST_CASE("identical configs yield byte-identical artifacts at any thread count") {
  TempDir dir("cli_determinism");
  write_config(dir / "cfg.json", kSmallEnsemble);
  REQUIRE(run("simulate --config " + (dir / "cfg.json") + " --out " + (dir / "a") +
                  " --threads 1",
              dir / "log") == 0);
  REQUIRE(run("simulate --config " + (dir / "cfg.json") + " --out " + (dir / "b") +
                  " --threads 3",
              dir / "log") == 0);
  for (const char* name : {"manifest.json", "ensemble.csv", "moments.csv", "summary.json"}) {
    const std::string a = spde::read_file(dir / ("a/" + std::string(name)));
    const std::string b = spde::read_file(dir / ("b/" + std::string(name)));
    CHECK(a == b);
  }
}

TEST_CASE("seed override changes the ensemble") {
  TempDir dir("cli_seed");
  write_config(dir / "cfg.json", kSmallEnsemble);
  REQUIRE(run("simulate --config " + (dir / "cfg.json") + " --out " + (dir / "a"),
              dir / "log") == 0);
  REQUIRE(run("simulate --config " + (dir / "cfg.json") + " --out " + (dir / "b") + " --seed 8",
              dir / "log") == 0);
  CHECK(spde::read_file(dir / "a/ensemble.csv") != spde::read_file(dir / "b/ensemble.csv"));
}

TEST_CASE("environment variable overrides the output directory") {
  TempDir dir("cli_env");
  write_config(dir / "cfg.json", kSmallEnsemble);
  setenv("SPDE_HOLDER_OUT", (dir / "envout").c_str(), 1);
  const int rc = run("simulate --config " + (dir / "cfg.json"), dir / "log");
  unsetenv("SPDE_HOLDER_OUT");
  REQUIRE(rc == 0);
  CHECK(fs::exists(dir / "envout/manifest.json"));
}

TEST_CASE("verify-semigroup writes diagnostics") {
  TempDir dir("cli_verify");
  write_config(dir / "cfg.json", R"({"d": 1, "nx": 65, "dt": 0.0078125, "samples": 100})");
  REQUIRE(run("verify-semigroup --config " + (dir / "cfg.json") + " --out " + (dir / "out"),
              dir / "log") == 0);
  CHECK(fs::exists(dir / "out/semigroup.json"));
  CHECK(fs::exists(dir / "out/kernel_decay.csv"));
  const std::string diag = spde::read_file(dir / "out/semigroup.json");
  CHECK(diag.find("kernel_fit") != std::string::npos);
}

TEST_CASE("selftest passes on a healthy build") {
  TempDir dir("cli_selftest");
  CHECK(run("selftest", dir / "log") == 0);
  const std::string out = spde::read_file(dir / "log");
  CHECK(out.find("[ok]") != std::string::npos);
  CHECK(out.find("[FAIL]") == std::string::npos);
}
