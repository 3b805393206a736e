#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream s;
  s << is.rdbuf();
  return s.str();
}

class Sandbox {
 public:
  Sandbox() : root_(fs::temp_directory_path() / ("optrc_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Sandbox() { fs::remove_all(root_); }

  fs::path operator/(const std::string& name) const { return root_ / name; }

  Result run(const std::string& args) const {
    const fs::path err = root_ / "stderr.txt";
    const std::string cmd = std::string(OPTRC_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(root_ / name) << text;
    return root_ / name;
  }

 private:
  fs::path root_;
};

const char* kSmallRun = R"(seed: 3
horizons: [1, 2, 5, 10, 30]
train_length: 400
test_length: 400
n_test_windows: 50
averaging_runs: 2
reservoir:
  n_res: 48
)";

}  // namespace

TEST_CASE("generate is deterministic and writes a manifest") {
  Sandbox box;
  REQUIRE(box.run("generate --length 300 --seed 5 --out-dir " + (box / "a").string()).code == 0);
  REQUIRE(box.run("generate --length 300 --seed 5 --out-dir " + (box / "b").string()).code == 0);
  REQUIRE(box.run("generate --length 300 --seed 6 --out-dir " + (box / "c").string()).code == 0);
  const auto a = slurp(box / "a" / "mackey_glass.csv");
  CHECK(a == slurp(box / "b" / "mackey_glass.csv"));
  CHECK(a != slurp(box / "c" / "mackey_glass.csv"));
  std::istringstream lines(a);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "t,u,u_normalized");
  std::size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 300);

  const auto manifest = nlohmann::json::parse(slurp(box / "a" / "manifest.json"));
  CHECK(manifest["command"] == "generate");
  CHECK(manifest["master_seed"] == 5);
  CHECK(manifest["outputs"][0]["file"] == "mackey_glass.csv");
  CHECK(manifest["outputs"][0]["sha256"].get<std::string>().size() == 64);
  CHECK(!manifest["defaults_applied"].empty());
  CHECK(!fs::exists(box / "a" / "manifest.json.tmp"));
}

TEST_CASE("encode-analysis writes a 101 x 101 distance matrix") {
  Sandbox box;
  REQUIRE(box.run("encode-analysis --kind basket --n-bin 10 --out-dir " + (box / "e").string()).code == 0);
  std::istringstream csv(slurp(box / "e" / "distance_matrix.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 100);
  }
  CHECK(rows == 101);
  const auto summary = nlohmann::json::parse(slurp(box / "e" / "encoding_summary.json"));
  CHECK(summary["distinct_codes"] == 17);
}

TEST_CASE("run from a config file is reproducible") {
  Sandbox box;
  const auto cfg = box.write("small.yaml", kSmallRun);
  REQUIRE(box.run("run --config " + cfg.string() + " --out-dir " + (box / "r1").string()).code == 0);
  REQUIRE(box.run("run --config " + cfg.string() + " --out-dir " + (box / "r2").string()).code == 0);
  CHECK(slurp(box / "r1" / "nmse_curve.csv") == slurp(box / "r2" / "nmse_curve.csv"));
  CHECK(slurp(box / "r1" / "predictions.csv") == slurp(box / "r2" / "predictions.csv"));
  const auto manifest = nlohmann::json::parse(slurp(box / "r1" / "manifest.json"));
  CHECK(manifest["config"]["reservoir"]["n_res"] == 48);
  CHECK(manifest["config_sha256"].get<std::string>().size() == 64);
}

TEST_CASE("exit codes and structured errors") {
  Sandbox box;
  SUBCASE("config errors exit with 1") {
    const auto cfg = box.write("bad.yaml", "reservoir:\n  leak_rate: 1.5\n");
    const auto r = box.run("run --config " + cfg.string() + " --out-dir " + (box / "o").string());
    CHECK(r.code == 1);
    const auto err = nlohmann::json::parse(r.err);
    CHECK(err["error"]["category"] == "config");
    CHECK(err["error"]["exit_code"] == 1);
    CHECK(err["error"]["message"].get<std::string>().find("leak_rate") != std::string::npos);
    CHECK(!fs::exists(box / "o" / "manifest.json"));
  }
  SUBCASE("usage errors exit with 1") {
    CHECK(box.run("run --no-such-flag").code == 1);
    CHECK(box.run("").code == 1);
    CHECK(box.run("run --preset nope --out-dir " + (box / "o").string()).code == 1);
  }
  SUBCASE("numerical errors exit with 2") {
    const auto cfg = box.write("singular.yaml",
                               "alpha: 0\nhorizons: [1, 2]\ntrain_length: 150\ntest_length: 150\n"
                               "n_test_windows: 10\naveraging_runs: 1\nreservoir:\n  n_res: 64\n");
    const auto r = box.run("run --config " + cfg.string() + " --out-dir " + (box / "o").string());
    CHECK(r.code == 2);
    CHECK(nlohmann::json::parse(r.err)["error"]["type"] == "SingularError");
  }
  SUBCASE("io errors exit with 3") {
    CHECK(box.run("run --config " + (box / "missing.yaml").string()).code == 3);
    box.write("file", "x");
    CHECK(box.run("generate --length 10 --out-dir " + (box / "file" / "sub").string()).code == 3);
  }
}

TEST_CASE("diagnose reports a contracting SLM reservoir") {
  Sandbox box;
  REQUIRE(box.run("diagnose --preset slm --out-dir " + (box / "d").string()).code == 0);
  const auto report = nlohmann::json::parse(slurp(box / "d" / "diagnostics.json"));
  CHECK(report["echo_state_final_ratio"].get<double>() < 1e-3);
  CHECK(report["separation"].get<double>() > report["approximation"].get<double>());
}
