#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpeq/cli.hpp"
#include "lpeq/io.hpp"
#include "support.hpp"

using namespace lpeq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lpeq");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Writes a copy of a shipped config with edits applied through a callback.
template <class F>
std::string edited(const std::string& name, const fs::path& dir, F&& edit) {
  json j = json::parse(read_text_file(testing::config_path(name)));
  edit(j);
  const fs::path p = dir / ("edited_" + name);
  write_text_file(p, j.dump(2));
  return p.string();
}

}  // namespace

TEST_CASE("solve on P* writes the closed forms") {
  const fs::path dir = testing::scratch_dir("cli_solve");
  const Run r = cli({"solve", testing::config_path("pstar.json"), "--out", dir.string()});
  REQUIRE(r.code == exit_ok);
  for (const char* f : {"ode.csv", "paths.csv", "summary.json", "manifest.json"}) {
    INFO(f);
    CHECK(fs::exists(dir / f));
  }
  const json s = json::parse(read_text_file(dir / "summary.json"));
  CHECK(s["backend"] == "ode");
  CHECK(std::abs(s["kappa0"].get<double>() - 2.0) <= 1e-9);
  CHECK(std::abs(s["r0"].get<double>() + 1.0) <= 1e-9);
  CHECK(std::abs(s["sigma_A0"].get<double>()) <= 1e-12);
  CHECK(std::abs(s["kappa0"].get<double>() / s["benchmark"]["kappa_pe0"].get<double>() - 2.0) <=
        1e-9);
  const json m = json::parse(read_text_file(dir / "manifest.json"));
  CHECK(m["command"] == "solve");
  CHECK(m["seed"] == 7);
  CHECK(m["files"].size() == 3);
}

TEST_CASE("solve output is byte-identical across runs and output locations") {
  const fs::path a = testing::scratch_dir("cli_det_a");
  const fs::path b = testing::scratch_dir("cli_det_b");
  const std::string cfg = testing::config_path("tanh.json");
  REQUIRE(cli({"solve", cfg, "--out", a.string()}).code == exit_ok);
  REQUIRE(cli({"solve", cfg, "--out", b.string()}).code == exit_ok);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    INFO(name.string());
    REQUIRE(fs::exists(b / name));
    CHECK(read_text_file(e.path()) == read_text_file(b / name));
    ++compared;
  }
  CHECK(compared == 9);
}

TEST_CASE("seed override changes paths but not fields") {
  const fs::path a = testing::scratch_dir("cli_seed_a");
  const fs::path b = testing::scratch_dir("cli_seed_b");
  const std::string cfg = testing::config_path("tanh.json");
  REQUIRE(cli({"solve", cfg, "--out", a.string(), "--seed", "99"}).code == exit_ok);
  REQUIRE(cli({"solve", cfg, "--out", b.string()}).code == exit_ok);
  CHECK(read_text_file(a / "field_a.csv") == read_text_file(b / "field_a.csv"));
  CHECK(read_text_file(a / "paths.csv") != read_text_file(b / "paths.csv"));
  CHECK(json::parse(read_text_file(a / "manifest.json"))["seed"] == 99);
}

TEST_CASE("format selection") {
  const fs::path dir = testing::scratch_dir("cli_json_only");
  const Run r =
      cli({"solve", testing::config_path("pstar.json"), "--out", dir.string(), "--format", "json"});
  REQUIRE(r.code == exit_ok);
  CHECK(fs::exists(dir / "summary.json"));
  CHECK_FALSE(fs::exists(dir / "paths.csv"));
  CHECK_FALSE(fs::exists(dir / "ode.csv"));
  CHECK(cli({"solve", testing::config_path("pstar.json"), "--format", "xml"}).code == exit_config);
}

TEST_CASE("output directory from the environment") {
  const fs::path dir = testing::scratch_dir("cli_env");
  ::setenv("LPEQ_OUT_DIR", dir.string().c_str(), 1);
  const Run r = cli({"compare", testing::config_path("pstar.json")});
  ::unsetenv("LPEQ_OUT_DIR");
  REQUIRE(r.code == exit_ok);
  CHECK(fs::exists(dir / "compare.csv"));
  CHECK(fs::exists(dir / "compare.json"));
}

TEST_CASE("compare reports the benchmark ordering") {
  const fs::path dir = testing::scratch_dir("cli_compare");
  const Run r = cli({"compare", testing::config_path("tanh.json"), "--out", dir.string()});
  REQUIRE(r.code == exit_ok);
  const json j = json::parse(read_text_file(dir / "compare.json"));
  CHECK(j["kappa_above_pe"] == true);
  CHECK(j["rate_below_pe"] == true);
  CHECK(r.out.find("kappa > kappa_pe: true") != std::string::npos);
}

TEST_CASE("configuration errors exit 2") {
  const fs::path dir = testing::scratch_dir("cli_errors");
  const auto missing = edited("pstar.json", dir, [](json& j) { j["model"]["dividend"].erase("bound_M"); });
  Run r = cli({"solve", missing, "--out", dir.string()});
  CHECK(r.code == exit_config);
  CHECK(r.err.find("model.dividend.bound_M") != std::string::npos);

  const auto few = edited("pstar.json", dir, [](json& j) { j["mc"]["n_paths"] = 500; });
  r = cli({"verify", few, "--out", dir.string()});
  CHECK(r.code == exit_config);
  CHECK(r.err.find("mc.n_paths") != std::string::npos);

  CHECK(cli({"solve", testing::config_path("pstar.json"), "--bogus"}).code == exit_config);
  CHECK(cli({"solve"}).code == exit_config);
  CHECK(cli({}).code == exit_config);
  CHECK(cli({"solve", (dir / "nope.json").string()}).code == exit_config);
  CHECK(cli({"verify", testing::config_path("pstar.json"), "--corrupt-kappa", "-1"}).code ==
        exit_config);
}

TEST_CASE("assumption violations exit 4") {
  const fs::path dir = testing::scratch_dir("cli_assumption");
  const auto bad = edited("pstar.json", dir,
                          [](json& j) { j["model"]["dividend"]["params"]["mu0"] = 3.0; });
  const Run r = cli({"solve", bad, "--out", dir.string()});
  CHECK(r.code == exit_assumption);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("verify passes on P* and fails with a corrupted kappa") {
  const fs::path good = testing::scratch_dir("cli_verify_good");
  Run r = cli({"verify", testing::config_path("pstar.json"), "--out", good.string()});
  CHECK(r.code == exit_ok);
  CHECK(r.out.find("overall: PASS") != std::string::npos);
  const json rep = json::parse(read_text_file(good / "report.json"));
  CHECK(rep["overall_pass"] == true);

  const fs::path bad = testing::scratch_dir("cli_verify_bad");
  r = cli({"verify", testing::config_path("pstar.json"), "--out", bad.string(), "--corrupt-kappa",
           "1.5"});
  CHECK(r.code == exit_verify_failed);
  const json broken = json::parse(read_text_file(bad / "report.json"));
  CHECK(broken["overall_pass"] == false);
  CHECK(broken["kappa_scale"] == 1.5);
}
