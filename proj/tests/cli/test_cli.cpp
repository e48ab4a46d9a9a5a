#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(SLC_TEST_SCRATCH) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SLC_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("measure writes a summary") {
    const auto dir = scratch("measure");
    write(dir / "c.json", R"({"subcommand": "measure", "matrix": [[0, -1], [1, 0]], "norm": "L2"})");
    CHECK(cli("measure --config " + (dir / "c.json").string() + " --out " + (dir / "out").string(), dir / "log") == 0);
    const auto s = json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(s["results"]["mu"].get<double>() == doctest::Approx(0.0));
    CHECK(s["config"]["matrix"] == json::parse("[[0, -1], [1, 0]]"));
  }

  TEST_CASE("bound reports the Jacobian-measure bound") {
    const auto dir = scratch("bound");
    write(dir / "c.json", R"({"model": {"name": "vanderpol-multiplicative", "params": {"sigma": 0.35}},
                               "domain": {"lo": [-2, -2], "hi": [2, 2]}, "l": 2})");
    CHECK(cli("bound --config " + (dir / "c.json").string() + " --out " + (dir / "out").string(), dir / "log") == 0);
    const auto s = json::parse(slurp(dir / "out" / "summary.json"));
    CHECK(s["results"]["bound_eq14"].get<double>() == doctest::Approx(0.04).epsilon(1e-9));
  }

  TEST_CASE("invalid input exits with status 2") {
    const auto dir = scratch("invalid");
    write(dir / "c.json", R"({"subcommand": "measure", "matrix": [[1]]})");
    CHECK(cli("dance --config " + (dir / "c.json").string() + " --out " + (dir / "out").string(), dir / "log") == 2);
    CHECK(slurp(dir / "log").find("unknown subcommand") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));

    write(dir / "neg.json", R"({"subcommand": "simulate", "model": {"name": "scalar-linear", "params": {"a": -1, "sigma": 0.5}},
                                 "initials": [[1]], "T": 1, "h": -0.1})");
    CHECK(cli("simulate --config " + (dir / "neg.json").string() + " --out " + (dir / "out").string(), dir / "log") == 2);
    CHECK(slurp(dir / "log").find("h must be positive") != std::string::npos);

    CHECK(cli("measure --config " + (dir / "missing.json").string(), dir / "log") == 2);
    CHECK(cli("measure --threads 0", dir / "log") == 2);
  }

  TEST_CASE("validate prints the resolved config") {
    const auto dir = scratch("validate");
    write(dir / "c.json", R"({"subcommand": "measure", "matrix": [[1]]})");
    CHECK(cli("validate --config " + (dir / "c.json").string() + " --seed 17", dir / "log") == 0);
    const auto v = json::parse(slurp(dir / "log"));
    CHECK(v["valid"] == true);
    CHECK(v["config"]["seed"] == 17);
    write(dir / "bad.json", R"({"subcommand": "measure", "matrix": [[1]], "h": 1})");
    CHECK(cli("validate --config " + (dir / "bad.json").string(), dir / "log") == 2);
  }

  TEST_CASE("blow-up exits with status 1") {
    const auto dir = scratch("blowup");
    write(dir / "c.json", R"({"model": {"name": "scalar-linear", "params": {"a": 400, "sigma": 0.1}},
                               "initials": [[1.0], [2.0]], "T": 1, "h": 0.01, "realizations": 20})");
    CHECK(cli("experiment --config " + (dir / "c.json").string() + " --out " + (dir / "out").string(), dir / "log") == 1);
  }

  TEST_CASE("output_dir from the config") {
    const auto dir = scratch("outdir");
    write(dir / "c.json", json{{"subcommand", "measure"}, {"matrix", {{1.0}}}, {"output_dir", (dir / "here").string()}}.dump());
    CHECK(cli("measure --config " + (dir / "c.json").string(), dir / "log") == 0);
    CHECK(fs::exists(dir / "here" / "summary.json"));
  }

  TEST_CASE("re-running reproduces every file") {
    const auto dir = scratch("rerun");
    write(dir / "c.json", R"({"subcommand": "sync", "model": {"name": "vanderpol-multiplicative", "params": {"sigma": 0.35}},
                               "initials": [[1, -1], [2, -2], [0.5, 0.5]], "T": 1, "h": 0.001, "realizations": 20,
                               "record_stride": 10})");
    const std::string args = "sync --config " + (dir / "c.json").string() + " --out ";
    REQUIRE(cli(args + (dir / "a").string(), dir / "log") == 0);
    REQUIRE(cli(args + (dir / "b").string() + " --threads 3", dir / "log") == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) {
      CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));
      ++files;
    }
    CHECK(files >= 4);
  }
}
