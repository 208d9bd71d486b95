#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "topodyn/efm.hpp"
#include "topodyn/rng.hpp"

namespace topodyn {

struct AnalysisError : std::runtime_error {
  explicit AnalysisError(const std::string& what) : std::runtime_error(what) {}
};

struct DomainExitError : std::runtime_error {
  double last_valid_R;
  DomainExitError(double attempted, double last_valid)
      : std::runtime_error("Newton iterate " + std::to_string(attempted) +
                           " left the lift domain; last valid iterate " +
                           std::to_string(last_valid)),
        last_valid_R(last_valid) {}
};

// The coarse map seam: (R, epsilon, seed_key) -> F_T(R; epsilon).
// seed_key is the R value whose 1e-6 quantization keys the ensemble
// randomness; passing the center R for both side evaluations of a
// finite difference gives common random numbers across the pair.
using CoarseMap = std::function<double(double, double, double)>;

inline long long quantize_micro(double x) { return std::llround(x * 1e6); }

namespace analysis_detail {

struct ProductionMap {
  EnsembleSpec spec;
  LiftMode mode = LiftMode::geometric;
  const LiftCalibration* cal = nullptr;
  const ErGraph* pinned = nullptr;
  AnnealingParams ap;
  int threads = 1;
  std::map<std::tuple<long long, long long, long long>, double> memo;
  std::mutex mu;

  double eval(double R, double eps, double seed_key) {
    const auto key = std::make_tuple(quantize_micro(R), quantize_micro(eps),
                                     quantize_micro(seed_key));
    {
      std::lock_guard<std::mutex> lock(mu);
      const auto it = memo.find(key);
      if (it != memo.end()) return it->second;
    }
    const std::uint64_t seed =
        mix64(mix64(spec.master_seed ^ static_cast<std::uint64_t>(std::get<2>(key)) *
                                           0x9e3779b97f4a7c15ULL) ^
              static_cast<std::uint64_t>(std::get<1>(key)) * 0xbf58476d1ce4e5b9ULL);
    EnsembleSpec local = spec;
    local.master_seed = seed;
    const double out = efm_detail::coarse_step_full(R, eps, spec.params.T, local, mode, cal,
                                                    pinned, &ap, seed, threads)
                           .R_mean;
    std::lock_guard<std::mutex> lock(mu);
    memo.emplace(key, out);
    return out;
  }
};

}  // namespace analysis_detail

// Ensemble-backed coarse map with (R, eps)-keyed seeding and memoization.
inline CoarseMap make_coarse_map(const EnsembleSpec& spec, LiftMode mode,
                                 const LiftCalibration* cal, const ErGraph* pinned = nullptr,
                                 const AnnealingParams& ap = {}, int threads = 1) {
  auto pm = std::make_shared<analysis_detail::ProductionMap>();
  pm->spec = spec;
  pm->mode = mode;
  pm->cal = cal;
  pm->pinned = pinned;
  pm->ap = ap;
  pm->threads = threads;
  return [pm](double R, double eps, double seed_key) { return pm->eval(R, eps, seed_key); };
}

// G_T(R; eps) = F_T(R; eps) - R.
inline double g_function(const CoarseMap& F, double R, double eps) {
  return F(R, eps, R) - R;
}

struct FixedPoint {
  double R_star = 0.0;
  double epsilon = 0.0;
  double slope = 0.0;  // dG/dR at the root
  bool stable = false;
  double residual = 0.0;
  int newton_iterations = 0;
  bool converged = false;
  std::string note;
};

struct NewtonOpts {
  double tol = 1e-3;
  double h_floor = 5e-4;
  double h_rel = 0.05;
  int max_iter = 12;
  int max_halvings = 6;
  double domain_lo = 0.0;   // callers pass the calibration interval
  double domain_hi = std::numeric_limits<double>::infinity();
};

// Damped Newton on G with a central-difference slope under common
// random numbers; the line search only accepts steps that shrink |G|.
inline FixedPoint newton_fixed_point(const CoarseMap& F, double R0, double eps,
                                     const NewtonOpts& opts = {}) {
  FixedPoint fp;
  fp.epsilon = eps;
  double R = R0;
  if (R < opts.domain_lo || R > opts.domain_hi) throw DomainExitError(R, R0);
  double g = F(R, eps, R) - R;
  double slope = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    fp.newton_iterations = it;
    const double h = std::max(opts.h_floor, opts.h_rel * R);
    const double r_hi = std::min(R + h, opts.domain_hi);
    const double r_lo = std::max(R - h, opts.domain_lo);
    const double g_hi = F(r_hi, eps, R) - r_hi;
    const double g_lo = F(r_lo, eps, R) - r_lo;
    slope = (g_hi - g_lo) / (r_hi - r_lo);
    if (std::fabs(g) <= opts.tol) break;
    if (slope == 0.0) {
      fp.note = "zero slope";
      break;
    }
    double step = -g / slope;
    const double max_step = 0.5 * R + opts.h_floor;
    if (std::fabs(step) > max_step) step = step > 0 ? max_step : -max_step;
    bool moved = false;
    bool only_domain_blocks = true;
    const double attempted = R + step;
    for (int halving = 0; halving < opts.max_halvings; ++halving) {
      const double R_try = R + step;
      if (R_try < opts.domain_lo || R_try > opts.domain_hi) {
        step *= 0.5;
        continue;
      }
      only_domain_blocks = false;
      const double g_try = F(R_try, eps, R_try) - R_try;
      if (std::fabs(g_try) < std::fabs(g)) {
        R = R_try;
        g = g_try;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      if (only_domain_blocks) throw DomainExitError(attempted, R);
      fp.note = "line search stalled";
      break;
    }
  }
  fp.R_star = R;
  fp.residual = std::fabs(g);
  fp.slope = slope;
  fp.stable = slope < 0.0;
  fp.converged = fp.residual <= opts.tol;
  return fp;
}

// Scan-bracket-polish root finder.  Brackets come from sign changes of G
// on the grid; each gets a Newton polish with a bisection fallback, and
// roots closer than 1e-3 collapse into the better-resolved one.
inline std::vector<FixedPoint> find_all_roots(const CoarseMap& F, double eps,
                                              const std::vector<double>& R_grid,
                                              const NewtonOpts& opts = {}) {
  if (R_grid.size() < 2) throw AnalysisError("find_all_roots: grid needs at least 2 points");
  std::vector<double> gs(R_grid.size());
  for (std::size_t i = 0; i < R_grid.size(); ++i)
    gs[i] = F(R_grid[i], eps, R_grid[i]) - R_grid[i];
  std::vector<FixedPoint> roots;
  for (std::size_t i = 0; i + 1 < R_grid.size(); ++i) {
    if (gs[i] == 0.0) gs[i] = std::numeric_limits<double>::min();
    if (!(gs[i] > 0.0) == !(gs[i + 1] > 0.0)) continue;  // same sign: no crossing
    double a = R_grid[i], b = R_grid[i + 1];
    NewtonOpts local = opts;
    local.domain_lo = std::max(opts.domain_lo, a - (b - a));
    local.domain_hi = std::min(opts.domain_hi, b + (b - a));
    FixedPoint fp;
    try {
      fp = newton_fixed_point(F, 0.5 * (a + b), eps, local);
    } catch (const DomainExitError&) {
      fp.converged = false;
    }
    if (!fp.converged) {
      // bisection on the bracket; sign endpoints are already known
      double ga = gs[i];
      for (int k = 0; k < 40 && (b - a) > 1e-6; ++k) {
        const double m = 0.5 * (a + b);
        const double gm = F(m, eps, m) - m;
        if (std::fabs(gm) <= opts.tol) {
          a = b = m;
          break;
        }
        if ((gm > 0.0) == (ga > 0.0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      const double m = 0.5 * (a + b);
      fp = FixedPoint{};
      fp.epsilon = eps;
      fp.R_star = m;
      const double h = std::max(opts.h_floor, opts.h_rel * m);
      const double g_hi = F(m + h, eps, m) - (m + h);
      const double g_lo = F(m - h, eps, m) - (m - h);
      fp.slope = (g_hi - g_lo) / (2.0 * h);
      fp.stable = fp.slope < 0.0;
      fp.residual = std::fabs(F(m, eps, m) - m);
      fp.converged = fp.residual <= opts.tol;
      fp.note = "bisection fallback";
    }
    roots.push_back(fp);
  }
  std::sort(roots.begin(), roots.end(),
            [](const FixedPoint& x, const FixedPoint& y) { return x.R_star < y.R_star; });
  std::vector<FixedPoint> dedup;
  for (const auto& r : roots) {
    if (!dedup.empty() && std::fabs(r.R_star - dedup.back().R_star) < 1e-3) {
      if (r.residual < dedup.back().residual) dedup.back() = r;
      continue;
    }
    dedup.push_back(r);
  }
  return dedup;
}

struct FoldReport {
  double eps_lo = 0.0;
  double eps_hi = 0.0;
  int bisection_steps = 0;
};

struct BifurcationDiagram {
  std::vector<double> eps_grid;
  std::vector<std::vector<FixedPoint>> roots;  // per grid epsilon
  FoldReport fold;
  std::vector<std::string> warnings;
};

namespace analysis_detail {

inline int robust_root_count(const CoarseMap& F, double eps, const std::vector<double>& grid,
                             const NewtonOpts& opts, std::vector<FixedPoint>& out,
                             std::vector<std::string>& warnings) {
  out = find_all_roots(F, eps, grid, opts);
  if (out.size() == 2) {
    // a tangency artifact or a missed crossing; refine the scan once
    std::vector<double> dense;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      dense.push_back(grid[i]);
      dense.push_back(0.5 * (grid[i] + grid[i + 1]));
    }
    dense.push_back(grid.back());
    out = find_all_roots(F, eps, dense, opts);
    if (out.size() == 2)
      throw AnalysisError("two roots persist at epsilon = " + std::to_string(eps) +
                          " after grid refinement; increase the ensemble size N");
    warnings.push_back("grid refinement resolved a 2-root scan at epsilon = " +
                       std::to_string(eps));
  }
  return static_cast<int>(out.size());
}

}  // namespace analysis_detail

// Root structure across an ascending epsilon grid, with the saddle-node
// interval located by the 3-to-1 count change and tightened by bisection
// to width <= 0.005.
inline BifurcationDiagram bifurcation_sweep(const CoarseMap& F, const std::vector<double>& eps_grid,
                                            const std::vector<double>& R_grid,
                                            const NewtonOpts& opts = {}) {
  if (eps_grid.empty()) throw AnalysisError("bifurcation_sweep: empty epsilon grid");
  if (!std::is_sorted(eps_grid.begin(), eps_grid.end()) || eps_grid.front() <= 0.0 ||
      eps_grid.back() >= 0.5)
    throw AnalysisError("bifurcation_sweep: epsilon grid must be ascending within (0, 0.5)");
  BifurcationDiagram diag;
  diag.eps_grid = eps_grid;
  std::vector<int> counts;
  for (double eps : eps_grid) {
    std::vector<FixedPoint> roots;
    const int c =
        analysis_detail::robust_root_count(F, eps, R_grid, opts, roots, diag.warnings);
    if (roots.empty()) diag.warnings.push_back("no roots at epsilon = " + std::to_string(eps));
    for (auto& r : roots) r.epsilon = eps;
    diag.roots.push_back(std::move(roots));
    counts.push_back(c);
  }
  // enforce the expected pattern: 3 roots (s, u, s) below the fold, then 1 stable
  bool seen_one = false;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 3) {
      if (seen_one)
        throw AnalysisError("root count returned to 3 above the fold at epsilon = " +
                            std::to_string(eps_grid[k]));
      const auto& r = diag.roots[k];
      if (!(r[0].stable && !r[1].stable && r[2].stable))
        throw AnalysisError("stability pattern at epsilon = " + std::to_string(eps_grid[k]) +
                            " is not (stable, unstable, stable)");
    } else if (counts[k] == 1) {
      seen_one = true;
      if (!diag.roots[k][0].stable)
        throw AnalysisError("single root at epsilon = " + std::to_string(eps_grid[k]) +
                            " is unstable");
    } else {
      throw AnalysisError("unexpected root count " + std::to_string(counts[k]) +
                          " at epsilon = " + std::to_string(eps_grid[k]));
    }
  }
  // fold interval: first 3 -> 1 transition, bisected to width <= 0.005
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k + 1 < counts.size(); ++k)
    if (counts[k] == 3 && counts[k + 1] == 1) {
      lo = eps_grid[k];
      hi = eps_grid[k + 1];
      break;
    }
  if (hi > lo) {
    int steps = 0;
    while (hi - lo > 0.005) {
      const double mid = 0.5 * (lo + hi);
      std::vector<FixedPoint> roots;
      const int c = analysis_detail::robust_root_count(F, mid, R_grid, opts, roots, diag.warnings);
      ++steps;
      if (c >= 3)
        lo = mid;
      else
        hi = mid;
    }
    diag.fold = FoldReport{lo, hi, steps};
  } else {
    diag.warnings.push_back("no 3-to-1 root count transition on the epsilon grid");
  }
  return diag;
}

// Geometric grid used for G scans; spans the calibrated lift domain.
inline std::vector<double> default_root_grid(double r_lo, double r_hi, int n = 28) {
  std::vector<double> g;
  const double a = r_lo * 1.02, b = r_hi * 0.98;
  for (int i = 0; i < n; ++i)
    g.push_back(a * std::pow(b / a, static_cast<double>(i) / (n - 1)));
  return g;
}

}  // namespace topodyn
