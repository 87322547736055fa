#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "holonomy/cli.hpp"
#include "holonomy/sequences.hpp"

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path make_temp_dir() {
  static std::atomic<int> counter{0};
  fs::path p = fs::temp_directory_path() /
               ("holonomy_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
  fs::create_directories(p);
  return p;
}

struct TempDir {
  fs::path path;
  TempDir() : path(make_temp_dir()) {}
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::ostringstream out;
  std::ostringstream err;
  int code = holonomy::cli::run_command(args, out, err);
  if (out_text != nullptr) *out_text = out.str();
  if (err_text != nullptr) *err_text = err.str();
  return code;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buffer;
  buffer << f.rdbuf();
  return buffer.str();
}

ordered_json read_report(const fs::path& dir) {
  return ordered_json::parse(read_file(dir / "report.json"));
}

}  // namespace

TEST_CASE("phase-loop report carries the closed-form scale exactly") {
  TempDir dir;
  std::string out;
  int code = run_cli({"phase-loop", "--k", "1", "--phi", "0", "--refinement", "1", "--output",
                      dir.path.string()},
                     &out);
  CHECK(code == 0);
  CHECK(out.find("report.json") != std::string::npos);

  ordered_json report = read_report(dir.path);
  CHECK(report["mode"] == "phase-loop");
  CHECK(report["config"]["k"] == 1);
  CHECK(report["config"]["ambient"] == 2);
  CHECK(report["results"]["loop_length"] == 5);
  CHECK(report["results"]["scale_squared"].get<double>() == 0.0625);
  CHECK(report["results"]["amplitude_abs"].get<double>() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(report["results"]["solid_angle"].get<double>()) < 1e-12);
}

TEST_CASE("phase-loop argument, invariant, and half solid angle all track phi") {
  const double phi = std::numbers::pi / 4.0;
  TempDir dir;
  int code = run_cli({"phase-loop", "--phi", std::to_string(phi), "--refinement", "3",
                      "--output", dir.path.string()});
  CHECK(code == 0);

  ordered_json results = read_report(dir.path)["results"];
  const double parsed_phi = std::stod(std::to_string(phi));
  CHECK(results["amplitude_arg"].get<double>() == doctest::Approx(parsed_phi).epsilon(1e-9));
  CHECK(results["bargmann_arg"].get<double>() == doctest::Approx(parsed_phi).epsilon(1e-9));
  CHECK(results["half_solid_angle"].get<double>() == doctest::Approx(parsed_phi).epsilon(1e-6));
  CHECK(results["loop_length"] == 13);
}

TEST_CASE("compose report shows a clean diagonal holonomy") {
  TempDir dir;
  int code = run_cli({"compose", "--phases", "0.4,1.1,2.2", "--refinement", "2", "--seed", "9",
                      "--output", dir.path.string()});
  CHECK(code == 0);

  ordered_json report = read_report(dir.path);
  CHECK(report["config"]["k"] == 3);
  ordered_json results = report["results"];
  CHECK(results["unitarity_defect"].get<double>() < 1e-8);
  CHECK(results["max_phase_error"].get<double>() < 1e-9);
  CHECK(results["survival"]["spread"].get<double>() < 1e-10);
  CHECK(results["survival"]["mean"].get<double>() ==
        doctest::Approx(results["scale_squared"].get<double>()).epsilon(1e-9));
  CHECK(results["holonomy"].size() == 3);
}

TEST_CASE("compose needs phases once k exceeds one") {
  TempDir dir;
  std::string err;
  int code = run_cli({"compose", "--k", "2", "--output", dir.path.string()}, nullptr, &err);
  CHECK(code == 2);
  CHECK(err.find("phases") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path / "report.json"));

  code = run_cli({"compose", "--k", "3", "--phases", "0.1,0.2", "--output", dir.path.string()},
                 nullptr, &err);
  CHECK(code == 2);
}

TEST_CASE("isometry-check reports the tilted pair and its complement") {
  TempDir dir;
  const std::string theta_text = std::to_string(std::numbers::pi / 6.0);
  const double theta = std::stod(theta_text);
  int code =
      run_cli({"isometry-check", "--k", "2", "--theta", theta_text, "--output",
               dir.path.string()});
  CHECK(code == 0);

  ordered_json report = read_report(dir.path);
  CHECK(report["config"]["ambient"] == 4);
  ordered_json results = report["results"];
  CHECK(results["is_isometry"] == true);
  CHECK(results["scale_squared"].get<double>() ==
        doctest::Approx(std::cos(theta) * std::cos(theta)).epsilon(1e-9));
  CHECK(results["shared_dim"] == 0);
  CHECK(results["required_min_ambient"] == 4);
  CHECK(results["complement"]["is_isometry"] == true);
  CHECK(results["complement"]["scale_squared"].get<double>() ==
        doctest::Approx(std::sin(theta) * std::sin(theta)).epsilon(1e-9));
}

TEST_CASE("isometry-check flags a too-small ambient space") {
  TempDir dir;
  int code =
      run_cli({"isometry-check", "--k", "2", "--ambient", "3", "--output", dir.path.string()});
  CHECK(code == 0);
  ordered_json results = read_report(dir.path)["results"];
  CHECK(results["is_isometry"] == false);
  CHECK(results["reason"] == "ambient < 2k");

  int full = run_cli(
      {"isometry-check", "--k", "2", "--ambient", "2", "--output", dir.path.string()});
  CHECK(full == 0);
  results = read_report(dir.path)["results"];
  CHECK(results["trivial_identity"] == true);
  CHECK(results["complement"].is_null());

  std::string err;
  CHECK(run_cli({"isometry-check", "--k", "3", "--ambient", "2"}, nullptr, &err) == 2);
}

TEST_CASE("rus-run gathers completion statistics and a per-shot table") {
  TempDir dir;
  std::string out;
  int code = run_cli({"rus-run", "--phi", "0.9", "--shots", "400", "--seed", "5", "--per-shot",
                      "--output", dir.path.string()},
                     &out);
  CHECK(code == 0);

  ordered_json results = read_report(dir.path)["results"];
  CHECK(results["success_rate"].get<double>() == 1.0);
  CHECK(results["completed"] == 400);
  CHECK(std::abs(results["steps"]["mean"].get<double>() - 8.0) < 1.0);
  CHECK(results["expected_steps"].get<double>() == doctest::Approx(8.0).epsilon(1e-9));
  const std::size_t plus = results["phase_class_counts"]["plus"].get<std::size_t>();
  const std::size_t minus = results["phase_class_counts"]["minus"].get<std::size_t>();
  CHECK(plus + minus == 400);
  CHECK(plus > 100);
  CHECK(minus > 100);
  CHECK(results["fidelity"]["min"].get<double>() > 1.0 - 1e-9);
  CHECK(results["first_shot"]["fidelity_to_target"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-9));

  const std::string csv = read_file(dir.path / "shots.csv");
  CHECK(csv.rfind("shot,steps,completed,phase_class\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 401);
  CHECK(csv.substr(csv.find('\n') + 1, 2) == "0,");
}

TEST_CASE("rus-run without per-shot writes no csv") {
  TempDir dir;
  CHECK(run_cli({"rus-run", "--shots", "3", "--output", dir.path.string()}) == 0);
  CHECK(fs::exists(dir.path / "report.json"));
  CHECK_FALSE(fs::exists(dir.path / "shots.csv"));
}

TEST_CASE("identical configuration and seed reproduce the report byte for byte") {
  TempDir dir;
  const std::vector<std::string> args = {"rus-run",  "--phi",    "1.3",      "--shots", "200",
                                         "--seed",   "17",       "--per-shot", "--output",
                                         dir.path.string()};
  CHECK(run_cli(args) == 0);
  const std::string report_first = read_file(dir.path / "report.json");
  const std::string csv_first = read_file(dir.path / "shots.csv");

  CHECK(run_cli(args) == 0);
  CHECK(read_file(dir.path / "report.json") == report_first);
  CHECK(read_file(dir.path / "shots.csv") == csv_first);

  std::vector<std::string> other = args;
  other[6] = "18";
  CHECK(run_cli(other) == 0);
  CHECK(read_file(dir.path / "shots.csv") != csv_first);
}

TEST_CASE("config file fields load and explicit flags override them") {
  TempDir dir;
  const fs::path cfg = dir.path / "cfg.json";
  {
    std::ofstream f(cfg);
    f << R"({"mode": "phase-loop", "phi": 0.25, "refinement": 4, "k": 1})";
  }
  int code = run_cli({"phase-loop", "--config", cfg.string(), "--phi", "1.0", "--output",
                      dir.path.string()});
  CHECK(code == 0);
  ordered_json config = read_report(dir.path)["config"];
  CHECK(config["phi"].get<double>() == 1.0);
  CHECK(config["refinement"] == 4);

  std::string err;
  {
    std::ofstream f(cfg);
    f << R"({"mode": "compose"})";
  }
  CHECK(run_cli({"phase-loop", "--config", cfg.string()}, nullptr, &err) == 2);
  CHECK(err.find("mode") != std::string::npos);

  {
    std::ofstream f(cfg);
    f << R"({"phy": 0.25})";
  }
  CHECK(run_cli({"phase-loop", "--config", cfg.string()}, nullptr, &err) == 2);
  CHECK(err.find("phy") != std::string::npos);

  {
    std::ofstream f(cfg);
    f << "{ not json";
  }
  CHECK(run_cli({"phase-loop", "--config", cfg.string()}, nullptr, &err) == 2);
  CHECK(err.find("parse error") != std::string::npos);

  {
    std::ofstream f(cfg);
    f << R"({"refinement": -3})";
  }
  CHECK(run_cli({"phase-loop", "--config", cfg.string()}, nullptr, &err) == 2);
}

TEST_CASE("HOLONOMY_SEED fills in when no explicit seed is given") {
  TempDir dir;
  ::setenv("HOLONOMY_SEED", "777", 1);
  CHECK(run_cli({"rus-run", "--shots", "2", "--output", dir.path.string()}) == 0);
  CHECK(read_report(dir.path)["config"]["seed"] == 777);

  CHECK(run_cli({"rus-run", "--shots", "2", "--seed", "5", "--output", dir.path.string()}) ==
        0);
  CHECK(read_report(dir.path)["config"]["seed"] == 5);

  ::setenv("HOLONOMY_SEED", "not-a-number", 1);
  std::string err;
  CHECK(run_cli({"rus-run", "--shots", "2", "--output", dir.path.string()}, nullptr, &err) ==
        2);
  CHECK(err.find("HOLONOMY_SEED") != std::string::npos);
  ::unsetenv("HOLONOMY_SEED");
}

TEST_CASE("invalid invocations exit with the configuration code") {
  std::string err;
  CHECK(run_cli({"phase-loop", "--k", "0"}, nullptr, &err) == 2);
  CHECK(run_cli({"phase-loop", "--k", "2", "--m", "3"}, nullptr, &err) == 2);
  CHECK(run_cli({"rus-run", "--phases", "0.1,0.2", "--phi", "0.3"}, nullptr, &err) == 2);
  CHECK(run_cli({"zeno-sweep", "--refinement", "0"}, nullptr, &err) == 2);
  CHECK(run_cli({"bogus-mode"}, nullptr, &err) == 2);
  CHECK(run_cli({}, nullptr, &err) == 2);
  CHECK(run_cli({"phase-loop", "--no-such-flag"}, nullptr, &err) == 2);
  CHECK(run_cli({"phase-loop", "--config", "/nonexistent/cfg.json"}, nullptr, &err) == 2);
}

TEST_CASE("help text lists the subcommands and exits cleanly") {
  std::string out;
  CHECK(run_cli({"--help"}, &out) == 0);
  CHECK(out.find("phase-loop") != std::string::npos);
  CHECK(out.find("rus-run") != std::string::npos);
  CHECK(out.find("zeno-sweep") != std::string::npos);
}

TEST_CASE("zeno-sweep walks powers of two and matches the closed form") {
  TempDir dir;
  CHECK(run_cli({"zeno-sweep", "--phi", "0.7", "--refinement", "8", "--output",
                 dir.path.string()}) == 0);
  ordered_json results = read_report(dir.path)["results"];
  CHECK(results["monotone_increasing"] == true);
  CHECK(results["entries"].size() == 4);
  std::size_t expected_refinement = 1;
  for (const auto& entry : results["entries"]) {
    CHECK(entry["refinement"] == expected_refinement);
    CHECK(entry["closed_form_delta"].get<double>() < 1e-12);
    CHECK(entry["scale"].get<double>() ==
          doctest::Approx(holonomy::phase_loop_scale(expected_refinement)).epsilon(1e-12));
    expected_refinement *= 2;
  }
}

TEST_CASE("rus-analyze lays out the graph and the expected step count") {
  TempDir dir;
  CHECK(run_cli({"rus-analyze", "--phi", "0.9", "--output", dir.path.string()}) == 0);
  ordered_json results = read_report(dir.path)["results"];
  CHECK(results["node_count"] == 6);
  CHECK(results["expected_steps"].get<double>() == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(results["nodes"].size() == 6);
  CHECK(results["nodes"][0]["role"] == "start");
  for (const auto& node : results["nodes"]) {
    for (const auto& branch : node["branches"]) {
      CHECK(branch["probability"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
    }
  }
  CHECK(results["target_unitary"][1][1]["re"].get<double>() ==
        doctest::Approx(std::cos(0.9)).epsilon(1e-9));
  CHECK(results["target_unitary"][1][1]["im"].get<double>() ==
        doctest::Approx(std::sin(0.9)).epsilon(1e-9));
}
