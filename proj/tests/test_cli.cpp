#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "issp/experiments.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("issp_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(ISSP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("malformed config exits 2 with a line-numbered diagnostic") {
  const auto dir = scratch("malformed");
  const auto cfg = write(dir, "bad.json", "{\n  \"experiment\": \"simulate\",\n  \"seed\": ,\n}\n");
  CHECK(run_cli("run " + cfg.string(), dir / "log.txt") == 2);
  const std::string log = slurp(dir / "log.txt");
  CHECK(log.find(cfg.string() + ":3:11:") != std::string::npos);
}

TEST_CASE("parse errors carry line and column") {
  try {
    issp::parse_config("{\"a\": 1,\n\"b\": [1, 2,,]}", "cfg");
    FAIL("expected an error");
  } catch (const issp::Error& e) {
    CHECK(e.code() == issp::ErrorCode::kValidation);
    CHECK(std::string(e.what()).rfind("cfg:2:12:", 0) == 0);
  }
}

TEST_CASE("validation errors exit 2 and name the offending key") {
  const auto dir = scratch("unknown");
  const auto cfg = write(dir, "c.json", R"({"experiment": "simulate", "horizn": 5})");
  CHECK(run_cli("run " + cfg.string() + " --out " + (dir / "out").string(), dir / "log.txt") == 2);
  CHECK(slurp(dir / "log.txt").find("horizn") != std::string::npos);

  const auto neg = write(dir, "neg.json",
                         R"({"experiment": "simulate", "disturbance": {"kind": "gaussian", "variance": -1}})");
  CHECK(run_cli("run " + neg.string(), dir / "log2.txt") == 2);
  const auto missing = dir / "nope.json";
  CHECK(run_cli("run " + missing.string(), dir / "log3.txt") == 2);
  const auto name = write(dir, "name.json", R"({"experiment": "fly"})");
  CHECK(run_cli("run " + name.string(), dir / "log4.txt") == 2);
  CHECK_THROWS_AS(issp::run_experiment(issp::Json::array()), issp::Error);
}

TEST_CASE("bad flags exit 2") {
  const auto dir = scratch("flags");
  CHECK(run_cli("run", dir / "log.txt") == 2);
  CHECK(run_cli("run x.json --threads -3", dir / "log2.txt") == 2);
}

TEST_CASE("simulate writes a versioned report and a CSV") {
  const auto dir = scratch("simulate");
  const auto cfg = write(dir, "c.json",
                         R"({"experiment": "simulate", "horizon": 5, "trajectories": 4, "seed": 3})");
  CHECK(run_cli("run " + cfg.string() + " --out " + (dir / "out").string() + " --quiet", dir / "log.txt") == 0);
  CHECK(slurp(dir / "log.txt").empty());
  const auto report = issp::Json::parse(slurp(dir / "out" / "report.json"));
  CHECK(report.at("schema") == 1);
  CHECK(report.at("seed") == 3);
  const std::string csv = slurp(dir / "out" / "trajectories.csv");
  CHECK(csv.rfind("trajectory,k,x0,V,W,domain_exit\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 * 6);
}

TEST_CASE("seed override and thread count") {
  const issp::Json config = {{"experiment", "simulate"}, {"horizon", 10}, {"trajectories", 50}, {"seed", 1}};
  issp::RunOptions a;
  issp::RunOptions b;
  b.threads = 8;
  issp::RunOptions c;
  c.seed = 2;
  const auto ra = issp::run_experiment(config, a);
  const auto rb = issp::run_experiment(config, b);
  const auto rc = issp::run_experiment(config, c);
  REQUIRE(ra.files.size() == rb.files.size());
  for (std::size_t i = 0; i < ra.files.size(); ++i) {
    CHECK(ra.files[i].name == rb.files[i].name);
    CHECK(ra.files[i].content == rb.files[i].content);
  }
  CHECK(ra.files[0].name == "report.json");
  CHECK(ra.files[1].content != rc.files[1].content);
  CHECK(rc.report.at("seed") == 2);
}

TEST_CASE("every experiment produces in-range bounds") {
  const char* configs[] = {
      R"({"experiment": "bounds", "trajectories": 300})",
      R"({"experiment": "hitting-time", "trajectories": 300})",
      R"({"experiment": "sweep-M-eta", "trajectories": 200, "M_points": 4})",
      R"({"experiment": "certify", "samples": 2000})",
  };
  for (const char* text : configs) {
    const auto outcome = issp::run_experiment(issp::parse_config(text));
    CHECK(outcome.sound);
    CHECK(outcome.report.at("schema") == 1);
    const std::string dumped = outcome.report.dump();
    CHECK(dumped.find("\"nan\"") == std::string::npos);
  }
}

TEST_CASE("re-running a config byte-reproduces all outputs on disk") {
  const auto dir = scratch("repro");
  const auto cfg = write(dir, "c.json",
                         R"({"experiment": "reproduce-lqg", "trajectories": 200, "write_trajectories": true})");
  CHECK(run_cli("run " + cfg.string() + " --out " + (dir / "one").string() + " --threads 1", dir / "l1.txt") == 0);
  CHECK(run_cli("run " + cfg.string() + " --out " + (dir / "two").string() + " --threads 8", dir / "l2.txt") == 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "one")) {
    const auto other = dir / "two" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared >= 4);
}
