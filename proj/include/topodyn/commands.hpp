#pragma once

// Subcommand bodies behind the CLI. Each command resolves and validates its
// full parameter set first, computes everything in memory, and only then
// touches the filesystem, so a validation or numeric failure leaves no
// partial output. run_command() maps the typed errors onto the exit-code
// contract: 0 ok, 2 config, 3 numeric, 4 I/O.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "topodyn/analysis.hpp"
#include "topodyn/config.hpp"
#include "topodyn/csv.hpp"
#include "topodyn/efm.hpp"
#include "topodyn/manifest.hpp"

namespace topodyn {

namespace cmd_detail {

struct CommonSpec {
  EnsembleSpec spec;
  int threads = 1;
  int steps = 50;
  std::string out_dir = ".";
  LiftMode lift = LiftMode::geometric;
  AnnealingParams ap;
  std::string calibration_path;  // empty when not given
};

inline LiftMode parse_lift(const std::string& s) {
  if (s == "geometric") return LiftMode::geometric;
  if (s == "annealing") return LiftMode::annealing;
  throw ConfigError("lift must be 'geometric' or 'annealing', got '" + s + "'");
}

inline GraphPolicy parse_policy(const std::string& s) {
  if (s == "regenerate") return GraphPolicy::regenerate;
  if (s == "pinned") return GraphPolicy::pinned;
  throw ConfigError("graph_policy must be 'regenerate' or 'pinned', got '" + s + "'");
}

inline CommonSpec resolve_common(const ConfigMap& cfg, const char* default_lift = "geometric") {
  CommonSpec c;
  c.spec.K = static_cast<int>(cfg.get_int("K", 10000, 2, 100000000));
  c.spec.p = cfg.get_double("p", 0.001, 0.0, 1.0, true, true);
  c.spec.params.epsilon = cfg.get_double("epsilon", 0.2, 0.0, 0.5, true, true);
  c.spec.params.d0 = cfg.get_double("d0", 0.1, 0.0, 1.0);
  c.spec.params.T = static_cast<int>(cfg.get_int("T", 10, 0, 1000000000));
  c.spec.N = static_cast<int>(cfg.get_int("N", 20, 1, 1000000));
  c.spec.n_landmarks = static_cast<int>(cfg.get_int("landmarks", 50, 1, 1000000));
  c.spec.master_seed = cfg.get_u64("seed", 1);
  c.spec.graph_policy = parse_policy(cfg.get_string("graph_policy", "regenerate"));
  c.threads = static_cast<int>(cfg.get_int("threads", 1, 1, 4096));
  c.steps = static_cast<int>(cfg.get_int("steps", 50, 0, 1000000000));
  c.out_dir = cfg.get_string("out", ".");
  c.lift = parse_lift(cfg.get_string("lift", default_lift));
  c.calibration_path = cfg.get_string("calibration", "");
  c.ap.theta0 = cfg.get_double("theta0", c.ap.theta0, 0.0, 10.0, true, true);
  c.ap.cooling = cfg.get_double("cooling", c.ap.cooling, 0.0, 1.0, true, true);
  c.ap.plateau = static_cast<int>(cfg.get_int("plateau", c.ap.plateau, 1, 1000000));
  c.ap.tol = cfg.get_double("anneal_tol", c.ap.tol, 0.0, 1.0, true, true);
  c.ap.max_iter = static_cast<int>(cfg.get_int("anneal_max_iter", c.ap.max_iter, 1, 100000000));
  c.ap.max_restarts =
      static_cast<int>(cfg.get_int("anneal_restarts", c.ap.max_restarts, 1, 1000000));
  return c;
}

// Every effective value, written back in config syntax so the manifest
// replays the run without relying on defaults staying put.
inline std::map<std::string, std::string> resolved_map(const CommonSpec& c) {
  std::map<std::string, std::string> m;
  m["K"] = std::to_string(c.spec.K);
  m["p"] = format_double(c.spec.p);
  m["epsilon"] = format_double(c.spec.params.epsilon);
  m["d0"] = format_double(c.spec.params.d0);
  m["T"] = std::to_string(c.spec.params.T);
  m["N"] = std::to_string(c.spec.N);
  m["landmarks"] = std::to_string(c.spec.n_landmarks);
  m["seed"] = std::to_string(c.spec.master_seed);
  m["graph_policy"] = c.spec.graph_policy == GraphPolicy::pinned ? "pinned" : "regenerate";
  m["threads"] = std::to_string(c.threads);
  m["steps"] = std::to_string(c.steps);
  m["out"] = c.out_dir;
  m["lift"] = c.lift == LiftMode::annealing ? "annealing" : "geometric";
  if (!c.calibration_path.empty()) m["calibration"] = c.calibration_path;
  m["theta0"] = format_double(c.ap.theta0);
  m["cooling"] = format_double(c.ap.cooling);
  m["plateau"] = std::to_string(c.ap.plateau);
  m["anneal_tol"] = format_double(c.ap.tol);
  m["anneal_max_iter"] = std::to_string(c.ap.max_iter);
  m["anneal_restarts"] = std::to_string(c.ap.max_restarts);
  return m;
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s.push_back(',');
    s += format_double(xs[i]);
  }
  return s;
}

inline void write_text_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open '" + p.string() + "' for writing");
  os << body;
  if (!os) throw IoError("write failed for '" + p.string() + "'");
}

inline void emit(const CommonSpec& c, RunManifest& man,
                 const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + c.out_dir + "': " + ec.message());
  for (const auto& [name, body] : files) {
    write_text_file(std::filesystem::path(c.out_dir) / name, body);
    man.outputs.push_back(name);
  }
  std::ostringstream ms;
  man.write(ms);
  write_text_file(std::filesystem::path(c.out_dir) / (man.command + "_manifest.txt"), ms.str());
}

inline LiftCalibration load_calibration(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read calibration table '" + path + "'");
  return read_calibration_csv(is);
}

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline int count_undefined(const std::vector<RminRow>& rows) {
  int n = 0;
  for (const auto& r : rows)
    if (!r.r_min) ++n;
  return n;
}

}  // namespace cmd_detail

// One witness series per (epsilon, d0) cell; cell index keys the streams, so
// cell 0 with the same seed matches an N=1 ensemble run row for row.
inline void cmd_simulate(const ConfigMap& cfg) {
  cmd_detail::Timer timer;
  auto c = cmd_detail::resolve_common(cfg);
  const auto eps_list = cfg.get_double_list("eps_grid", {c.spec.params.epsilon});
  const auto d0_list = cfg.get_double_list("d0_grid", {c.spec.params.d0});
  for (double e : eps_list)
    if (!(e > 0.0 && e < 0.5))
      throw ConfigError("eps_grid entry " + format_double(e) + " outside (0, 0.5)");
  for (double d : d0_list)
    if (!(d >= 0.0 && d <= 1.0))
      throw ConfigError("d0_grid entry " + format_double(d) + " outside [0, 1]");

  RunManifest man;
  man.command = "simulate";
  man.resolved = cmd_detail::resolved_map(c);
  man.resolved["eps_grid"] = cmd_detail::join_doubles(eps_list);
  man.resolved["d0_grid"] = cmd_detail::join_doubles(d0_list);

  std::vector<std::pair<std::string, std::string>> files;
  std::uint64_t cell = 0;
  for (double eps : eps_list) {
    for (double d0 : d0_list) {
      RngStream gs = derive_stream(c.spec.master_seed, stream_purpose::graph, cell);
      const ErGraph g = generate_er(c.spec.K, c.spec.p, gs.next_u64());
      RngStream init = derive_stream(c.spec.master_seed, stream_purpose::init, cell);
      NetworkState s = init_state(c.spec.K, d0, init);
      RngStream dyn = derive_stream(c.spec.master_seed, stream_purpose::dynamics, cell);
      RngStream lm = derive_stream(c.spec.master_seed, stream_purpose::landmarks, cell);
      const auto rows = rmin_series(g, s, eps, c.steps, c.spec.n_landmarks, dyn, lm);
      const int undef = cmd_detail::count_undefined(rows);
      if (undef > 0)
        man.note("cell eps=" + format_double(eps) + " d0=" + format_double(d0) + ": " +
                 std::to_string(undef) + " steps with no loop (r_min undefined)");
      std::ostringstream os;
      write_witness_csv(os, rows);
      files.emplace_back("sim_e" + format_double(eps) + "_d" + format_double(d0) + ".csv",
                         os.str());
      ++cell;
    }
  }
  man.wall_seconds = timer.seconds();
  cmd_detail::emit(c, man, files);
}

inline void cmd_ensemble(const ConfigMap& cfg) {
  cmd_detail::Timer timer;
  auto c = cmd_detail::resolve_common(cfg);
  const CoarseSeries cs = ensemble_series(c.spec, c.steps, c.threads);
  RunManifest man;
  man.command = "ensemble";
  man.resolved = cmd_detail::resolved_map(c);
  int undef = 0;
  for (int dcnt : cs.defined)
    if (dcnt < c.spec.N) ++undef;
  if (undef > 0)
    man.note(std::to_string(undef) + " steps had realizations with no loop");
  std::ostringstream os;
  write_coarse_csv(os, cs);
  man.wall_seconds = timer.seconds();
  cmd_detail::emit(c, man, {{"ensemble.csv", os.str()}});
}

inline void cmd_calibrate(const ConfigMap& cfg) {
  cmd_detail::Timer timer;
  auto c = cmd_detail::resolve_common(cfg);
  const double lo = cfg.get_double("spacing_min", 0.0008, 1e-9, 0.25, true, true);
  const double hi = cfg.get_double("spacing_max", 0.06, 1e-9, 0.25, true, true);
  if (!(hi > lo)) throw ConfigError("spacing_max must exceed spacing_min");
  const int knots = static_cast<int>(cfg.get_int("spacing_knots", 14, 4, 200));
  const int reps = static_cast<int>(cfg.get_int("calibration_reps", 5, 1, 100));
  std::vector<double> grid;
  for (int i = 0; i < knots; ++i)
    grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (knots - 1)));

  const LiftCalibration cal =
      build_lift_calibration(c.spec.K, c.spec.n_landmarks, grid, c.spec.master_seed, reps);

  RunManifest man;
  man.command = "calibrate";
  man.resolved = cmd_detail::resolved_map(c);
  man.resolved["spacing_min"] = format_double(lo);
  man.resolved["spacing_max"] = format_double(hi);
  man.resolved["spacing_knots"] = std::to_string(knots);
  man.resolved["calibration_reps"] = std::to_string(reps);
  if (cal.spacing.size() < grid.size())
    man.note(std::to_string(grid.size() - cal.spacing.size()) +
             " knots dropped to keep the table strictly increasing");
  std::ostringstream os;
  write_calibration_csv(os, cal);
  man.wall_seconds = timer.seconds();
  cmd_detail::emit(c, man, {{"calibration.csv", os.str()}});
}

inline void cmd_coarse(const ConfigMap& cfg) {
  cmd_detail::Timer timer;
  auto c = cmd_detail::resolve_common(cfg);
  if (!cfg.has("R0")) throw ConfigError("missing required key 'R0'");
  const double R0 = cfg.get_double("R0", 0.0, 0.0, 10.0, true, true);
  const int macro_steps = static_cast<int>(cfg.get_int("macro_steps", 10, 0, 1000000));
  std::optional<LiftCalibration> cal;
  if (c.lift == LiftMode::geometric) {
    if (c.calibration_path.empty())
      throw ConfigError("geometric lift requires key 'calibration' (path to table CSV)");
    cal = cmd_detail::load_calibration(c.calibration_path);
  }
  ErGraph pinned;
  const ErGraph* pg = nullptr;
  if (c.spec.graph_policy == GraphPolicy::pinned) {
    RngStream gs = derive_stream(c.spec.master_seed, stream_purpose::graph, 0);
    pinned = generate_er(c.spec.K, c.spec.p, gs.next_u64());
    pg = &pinned;
  }
  const CoarseSeries cs =
      coarse_trajectory(R0, c.spec.params.epsilon, c.spec.params.T, macro_steps, c.spec, c.lift,
                        cal ? &*cal : nullptr, pg, &c.ap, c.threads);
  RunManifest man;
  man.command = "coarse";
  man.resolved = cmd_detail::resolved_map(c);
  man.resolved["R0"] = format_double(R0);
  man.resolved["macro_steps"] = std::to_string(macro_steps);
  for (std::size_t i = 0; i < cs.defined.size(); ++i)
    if (cs.defined[i] < c.spec.N)
      man.note("macro step " + std::to_string(i) + ": " +
               std::to_string(c.spec.N - cs.defined[i]) + " realizations with no loop");
  std::ostringstream os;
  write_coarse_csv(os, cs);
  man.wall_seconds = timer.seconds();
  cmd_detail::emit(c, man, {{"coarse.csv", os.str()}});
}

namespace cmd_detail {

inline std::vector<DiagramRow> diagram_rows(const std::vector<FixedPoint>& roots) {
  std::vector<DiagramRow> rows;
  for (const auto& fp : roots)
    rows.push_back({fp.epsilon, fp.R_star, fp.slope, fp.stable, fp.residual});
  return rows;
}

struct RootSetup {
  std::shared_ptr<LiftCalibration> cal;  // geometric lift only; kept alive for F
  CoarseMap F;
  NewtonOpts opts;
  std::vector<double> grid;
};

// The annealing lift can target any radius its search reaches, so the scan
// window comes from r_lo/r_hi; the geometric lift is confined to the
// calibration table's range.
inline RootSetup root_setup(const ConfigMap& cfg, const CommonSpec& c) {
  RootSetup rs;
  double lo, hi;
  if (c.lift == LiftMode::geometric) {
    if (c.calibration_path.empty())
      throw ConfigError("geometric lift requires key 'calibration' (path to table CSV)");
    rs.cal = std::make_shared<LiftCalibration>(load_calibration(c.calibration_path));
    lo = cfg.get_double("r_lo", rs.cal->r_lo(), rs.cal->r_lo(), rs.cal->r_hi());
    hi = cfg.get_double("r_hi", rs.cal->r_hi(), rs.cal->r_lo(), rs.cal->r_hi());
  } else {
    lo = cfg.get_double("r_lo", 0.0006, 1e-6, 1.0, true, true);
    hi = cfg.get_double("r_hi", 0.02, 1e-6, 1.0, true, true);
  }
  if (!(hi > lo)) throw ConfigError("r_hi must exceed r_lo");
  const int n = static_cast<int>(cfg.get_int("r_grid_points", 28, 4, 500));
  rs.grid = default_root_grid(lo, hi, n);
  rs.opts.domain_lo = lo;
  rs.opts.domain_hi = hi;
  CoarseMap base = make_coarse_map(c.spec, c.lift, rs.cal.get(), nullptr, c.ap, c.threads);
  rs.F = [base, keep = rs.cal](double R, double eps, double key) { return base(R, eps, key); };
  return rs;
}

}  // namespace cmd_detail

inline void cmd_fixed_points(const ConfigMap& cfg) {
  cmd_detail::Timer timer;
  auto c = cmd_detail::resolve_common(cfg, "annealing");
  auto rs = cmd_detail::root_setup(cfg, c);
  const auto roots = find_all_roots(rs.F, c.spec.params.epsilon, rs.grid, rs.opts);
  RunManifest man;
  man.command = "fixed-points";
  man.resolved = cmd_detail::resolved_map(c);
  man.resolved["r_grid_points"] = std::to_string(rs.grid.size());
  if (roots.empty()) man.note("no roots found on the scan grid");
  for (const auto& fp : roots) {
    if (!fp.converged)
      man.note("root near R=" + format_double(fp.R_star) + ": " +
               (fp.note.empty() ? std::string("not converged") : fp.note));
    else if (!fp.note.empty())
      man.note("root near R=" + format_double(fp.R_star) + ": " + fp.note);
  }
  std::ostringstream os;
  write_diagram_csv(os, cmd_detail::diagram_rows(roots));
  man.wall_seconds = timer.seconds();
  cmd_detail::emit(c, man, {{"fixed_points.csv", os.str()}});
}

inline void cmd_bifurcation(const ConfigMap& cfg) {
  cmd_detail::Timer timer;
  auto c = cmd_detail::resolve_common(cfg, "annealing");
  auto rs = cmd_detail::root_setup(cfg, c);
  const auto eps_grid = cfg.get_double_list("eps_grid", {0.16, 0.19, 0.22, 0.24, 0.26});
  const BifurcationDiagram diag = bifurcation_sweep(rs.F, eps_grid, rs.grid, rs.opts);

  RunManifest man;
  man.command = "bifurcation";
  man.resolved = cmd_detail::resolved_map(c);
  man.resolved["eps_grid"] = cmd_detail::join_doubles(eps_grid);
  man.resolved["r_grid_points"] = std::to_string(rs.grid.size());
  for (const auto& w : diag.warnings) man.note(w);

  std::vector<DiagramRow> rows;
  for (const auto& per_eps : diag.roots)
    for (const auto& r : cmd_detail::diagram_rows(per_eps)) rows.push_back(r);
  std::ostringstream os;
  write_diagram_csv(os, rows);

  std::ostringstream fold;
  fold << "{\n";
  if (diag.fold.eps_hi > diag.fold.eps_lo) {
    fold << "  \"fold\": {\"eps_lo\": " << format_double(diag.fold.eps_lo)
         << ", \"eps_hi\": " << format_double(diag.fold.eps_hi)
         << ", \"bisection_steps\": " << diag.fold.bisection_steps << "},\n";
  } else {
    fold << "  \"fold\": null,\n";
  }
  fold << "  \"warnings\": [";
  for (std::size_t i = 0; i < diag.warnings.size(); ++i) {
    if (i) fold << ", ";
    fold << '"' << diag.warnings[i] << '"';
  }
  fold << "]\n}\n";

  man.wall_seconds = timer.seconds();
  cmd_detail::emit(c, man, {{"bifurcation.csv", os.str()}, {"fold.json", fold.str()}});
}

inline int run_command(const std::string& name, const ConfigMap& cfg, std::ostream& err) {
  try {
    if (name == "simulate")
      cmd_simulate(cfg);
    else if (name == "ensemble")
      cmd_ensemble(cfg);
    else if (name == "calibrate")
      cmd_calibrate(cfg);
    else if (name == "coarse")
      cmd_coarse(cfg);
    else if (name == "fixed-points")
      cmd_fixed_points(cfg);
    else if (name == "bifurcation")
      cmd_bifurcation(cfg);
    else
      throw ConfigError("unknown command '" + name + "'");
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace topodyn
