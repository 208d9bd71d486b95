#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "topodyn/commands.hpp"

using namespace topodyn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "topodyn_cmd_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

ConfigMap parse_text(const std::string& text) {
  std::istringstream is(text);
  return ConfigMap::parse(is);
}

int run(const std::string& command, const std::string& cfg_text, std::string* err_out = nullptr) {
  std::ostringstream err;
  const int code = run_command(command, parse_text(cfg_text), err);
  if (err_out) *err_out = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("invalid parameters exit 2 and write nothing") {
  const fs::path dir = fresh_dir("invalid_eps");
  std::string err;
  const int code = run("simulate",
                       "epsilon = 0.6\nK = 100\nout = " + dir.string() + "\n", &err);
  REQUIRE(code == 2);
  REQUIRE(err.find("config error") != std::string::npos);
  REQUIRE(err.find("epsilon") != std::string::npos);
  REQUIRE_FALSE(fs::exists(dir));
}

TEST_CASE("unknown command exits 2") {
  std::string err;
  REQUIRE(run("frobnicate", "K = 100\n", &err) == 2);
  REQUIRE(err.find("frobnicate") != std::string::npos);
}

TEST_CASE("zero steps produce a header-only series") {
  const fs::path dir = fresh_dir("zero_steps");
  const int code = run("simulate",
                       "K = 400\np = 0.02\nepsilon = 0.2\nd0 = 0.3\nsteps = 0\n"
                       "landmarks = 12\nseed = 5\nout = " + dir.string() + "\n");
  REQUIRE(code == 0);
  REQUIRE(slurp(dir / "sim_e0.2_d0.3.csv") == "t,d,r_min,landmark_count,defined\n");
  REQUIRE(fs::exists(dir / "simulate_manifest.txt"));
}

TEST_CASE("simulate replays byte for byte") {
  const std::string base =
      "K = 400\np = 0.02\nepsilon = 0.22\nd0 = 0.4\nsteps = 15\n"
      "landmarks = 15\nseed = 99\n";
  const fs::path a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
  REQUIRE(run("simulate", base + "out = " + a.string() + "\n") == 0);
  REQUIRE(run("simulate", base + "out = " + b.string() + "\n") == 0);
  const std::string fa = slurp(a / "sim_e0.22_d0.4.csv");
  REQUIRE(fa == slurp(b / "sim_e0.22_d0.4.csv"));
  REQUIRE(fa.find("t,d,r_min") == 0);
}

TEST_CASE("ensemble output is thread-count invariant") {
  const std::string base =
      "K = 400\np = 0.025\nepsilon = 0.22\nd0 = 0.4\nsteps = 8\nN = 6\n"
      "landmarks = 15\nseed = 31\n";
  const fs::path a = fresh_dir("ens_t1"), b = fresh_dir("ens_t4");
  REQUIRE(run("ensemble", base + "threads = 1\nout = " + a.string() + "\n") == 0);
  REQUIRE(run("ensemble", base + "threads = 4\nout = " + b.string() + "\n") == 0);
  REQUIRE(slurp(a / "ensemble.csv") == slurp(b / "ensemble.csv"));
}

TEST_CASE("a manifest fed back as config reproduces the run") {
  const fs::path a = fresh_dir("replay_a"), b = fresh_dir("replay_b");
  REQUIRE(run("ensemble",
              "K = 300\np = 0.03\nepsilon = 0.2\nd0 = 0.5\nsteps = 6\nN = 4\n"
              "landmarks = 12\nseed = 77\nout = " + a.string() + "\n") == 0);
  std::istringstream man(slurp(a / "ensemble_manifest.txt"));
  ConfigMap cfg = ConfigMap::parse(man);
  cfg.set("out", b.string());
  std::ostringstream err;
  REQUIRE(run_command("ensemble", cfg, err) == 0);
  REQUIRE(slurp(a / "ensemble.csv") == slurp(b / "ensemble.csv"));
}

TEST_CASE("calibrate then coarse consume the table") {
  const fs::path cal_dir = fresh_dir("cal"), coarse_dir = fresh_dir("coarse");
  REQUIRE(run("calibrate",
              "K = 1500\nlandmarks = 25\nspacing_min = 0.004\nspacing_max = 0.05\n"
              "spacing_knots = 6\ncalibration_reps = 5\nseed = 11\n"
              "out = " + cal_dir.string() + "\n") == 0);
  const fs::path table = cal_dir / "calibration.csv";
  std::ifstream tis(table);
  const LiftCalibration cal = read_calibration_csv(tis);  // validates monotone, >= 2 rows
  REQUIRE(cal.spacing.size() >= 4);

  const double R0 = 0.5 * (cal.r_lo() + cal.r_hi());
  const int code = run("coarse",
                       "K = 1500\np = 0.002\nepsilon = 0.25\nT = 2\nN = 4\nlandmarks = 25\n"
                       "seed = 21\nlift = geometric\ncalibration = " + table.string() +
                       "\nR0 = " + format_double(R0) + "\nmacro_steps = 2\n"
                       "out = " + coarse_dir.string() + "\n");
  REQUIRE(code == 0);
  std::istringstream cis(slurp(coarse_dir / "coarse.csv"));
  const CoarseSeries cs = read_coarse_csv(cis);
  REQUIRE(cs.times.size() == 3);
  REQUIRE(cs.times[0] == 0);
  REQUIRE(cs.times[1] == 2);
  REQUIRE(cs.times[2] == 4);
  REQUIRE(cs.R[0] == R0);
}

TEST_CASE("coarse without R0 or without a table exits 2") {
  const fs::path dir = fresh_dir("coarse_bad");
  std::string err;
  REQUIRE(run("coarse",
              "K = 300\nlift = annealing\nout = " + dir.string() + "\n", &err) == 2);
  REQUIRE(err.find("R0") != std::string::npos);
  REQUIRE(run("coarse",
              "K = 300\nR0 = 0.01\nlift = geometric\nout = " + dir.string() + "\n",
              &err) == 2);
  REQUIRE(err.find("calibration") != std::string::npos);
}

TEST_CASE("a missing calibration file exits 4") {
  const fs::path dir = fresh_dir("coarse_io");
  std::string err;
  const int code = run("coarse",
                       "K = 300\nR0 = 0.01\nlift = geometric\n"
                       "calibration = /nonexistent/table.csv\nout = " + dir.string() + "\n",
                       &err);
  REQUIRE(code == 4);
  REQUIRE(err.find("io error") != std::string::npos);
}

TEST_CASE("a lift target outside the table exits 3") {
  const fs::path cal_dir = fresh_dir("cal_range");
  REQUIRE(run("calibrate",
              "K = 1000\nlandmarks = 20\nspacing_min = 0.01\nspacing_max = 0.06\n"
              "spacing_knots = 5\ncalibration_reps = 5\nseed = 13\n"
              "out = " + cal_dir.string() + "\n") == 0);
  const fs::path dir = fresh_dir("coarse_range");
  std::string err;
  const int code = run("coarse",
                       "K = 1000\np = 0.01\nepsilon = 0.2\nT = 1\nN = 3\nlandmarks = 20\n"
                       "lift = geometric\ncalibration = " +
                       (cal_dir / "calibration.csv").string() +
                       "\nR0 = 1.5\nmacro_steps = 1\nout = " + dir.string() + "\n", &err);
  REQUIRE(code == 3);
  REQUIRE(err.find("numeric error") != std::string::npos);
}

TEST_CASE("fixed-points runs on a small geometric setup") {
  const fs::path cal_dir = fresh_dir("fp_cal");
  REQUIRE(run("calibrate",
              "K = 600\nlandmarks = 15\nspacing_min = 0.01\nspacing_max = 0.08\n"
              "spacing_knots = 5\ncalibration_reps = 5\nseed = 17\n"
              "out = " + cal_dir.string() + "\n") == 0);
  const fs::path dir = fresh_dir("fp_out");
  const int code = run("fixed-points",
                       "K = 600\np = 0.015\nepsilon = 0.3\nT = 1\nN = 3\nlandmarks = 15\n"
                       "seed = 23\nlift = geometric\ncalibration = " +
                       (cal_dir / "calibration.csv").string() +
                       "\nr_grid_points = 5\nout = " + dir.string() + "\n");
  REQUIRE(code == 0);
  std::istringstream is(slurp(dir / "fixed_points.csv"));
  const auto rows = read_diagram_csv(is);  // shape check; root count is system-dependent
  for (const auto& r : rows) {
    REQUIRE(r.epsilon == 0.3);
    REQUIRE(r.R_star > 0.0);
  }
  REQUIRE(fs::exists(dir / "fixed-points_manifest.txt"));
}
