#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "topodyn/circle.hpp"
#include "topodyn/dynamics.hpp"
#include "topodyn/graph.hpp"
#include "topodyn/parallel.hpp"
#include "topodyn/rng.hpp"
#include "topodyn/witness.hpp"

namespace topodyn {

struct CalibrationError : std::runtime_error {
  explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

struct RangeError : std::runtime_error {
  double lo, hi;
  RangeError(double target, double lo_, double hi_)
      : std::runtime_error("lift target " + std::to_string(target) +
                           " outside calibrated range [" + std::to_string(lo_) + ", " +
                           std::to_string(hi_) + "]"),
        lo(lo_), hi(hi_) {}
};

struct DegenerateEnsembleError : std::runtime_error {
  DegenerateEnsembleError()
      : std::runtime_error("more than half of the ensemble realizations had no defined radius") {}
};

enum class GraphPolicy { regenerate, pinned };
enum class LiftMode { geometric, annealing };

struct EnsembleSpec {
  int N = 20;
  std::uint64_t master_seed = 1;
  GraphPolicy graph_policy = GraphPolicy::regenerate;
  int K = 10000;
  double p = 0.001;
  int n_landmarks = 50;
  ModelParams params;  // epsilon, T, d0
};

struct CoarseSeries {
  std::vector<long long> times;
  std::vector<double> R;        // nan when no realization was defined
  std::vector<double> D;
  std::vector<int> defined;     // realizations contributing to R at this row
};

// Evenly spaced active set: agents nearest successive multiples of the
// spacing (a circumference fraction), starting at agent 0.
inline NetworkState lattice_state(int K, double spacing) {
  if (!(spacing > 1.0 / K) || !(spacing < 0.25))
    throw std::invalid_argument("lattice_state: spacing must lie in (1/K, 0.25)");
  NetworkState s;
  s.active.assign(static_cast<std::size_t>(K), 0);
  for (long long j = 0;; ++j) {
    const double x = static_cast<double>(j) * spacing;
    if (x >= 1.0) break;
    const long long idx = std::llround(x * K) % K;
    s.active[static_cast<std::size_t>(idx)] = 1;
  }
  return s;
}

// M operator: configuration -> r_min through landmark selection.
inline double restrict_state(const NetworkState& s, int n_landmarks, RngStream& rng) {
  const auto Z = WitnessSet::from_state(s);
  if (Z.size() < 3) throw NoLoopError{};
  const auto L = select_landmarks(Z, n_landmarks, rng);
  return min_betti1_radius(Z, L);
}

inline std::optional<double> try_restrict_state(const NetworkState& s, int n_landmarks,
                                                RngStream& rng) {
  const auto Z = WitnessSet::from_state(s);
  if (Z.size() < 3) return std::nullopt;
  const auto L = select_landmarks(Z, n_landmarks, rng);
  return try_min_betti1_radius(Z, L);
}

// Monotone (spacing, measured r_min) table; inversion interpolates
// linearly in r_min.
struct LiftCalibration {
  std::vector<double> spacing;  // fractions, strictly increasing
  std::vector<double> rbar;     // arc-length radii, strictly increasing

  double r_lo() const { return rbar.front(); }
  double r_hi() const { return rbar.back(); }

  double invert(double R_target) const {
    if (!(R_target >= rbar.front()) || !(R_target <= rbar.back()))
      throw RangeError(R_target, rbar.front(), rbar.back());
    const auto it = std::lower_bound(rbar.begin(), rbar.end(), R_target);
    std::size_t hi = static_cast<std::size_t>(it - rbar.begin());
    if (hi == 0) return spacing.front();
    const std::size_t lo = hi - 1;
    const double t = (R_target - rbar[lo]) / (rbar[hi] - rbar[lo]);
    return spacing[lo] + t * (spacing[hi] - spacing[lo]);
  }
};

// Measures r_min on lattice states across the spacing grid, averaging
// m_reps landmark re-selections per knot, and keeps the strictly
// increasing envelope.  Fewer than 4 surviving knots is a configuration
// error, not a recoverable state.
inline LiftCalibration build_lift_calibration(int K, int n_landmarks,
                                              const std::vector<double>& spacing_grid,
                                              std::uint64_t seed, int m_reps = 5) {
  if (m_reps < 5) throw CalibrationError("calibration: need at least 5 repetitions per knot");
  std::vector<std::pair<double, double>> knots;
  RngStream rng = derive_stream(seed, stream_purpose::calibrate, 0);
  for (double delta : spacing_grid) {
    const NetworkState s = lattice_state(K, delta);
    const auto Z = WitnessSet::from_state(s);
    double sum = 0.0;
    int defined = 0;
    for (int rep = 0; rep < m_reps; ++rep) {
      auto L = select_landmarks(Z, n_landmarks, rng);
      const auto r = try_min_betti1_radius(Z, L);
      if (r) {
        sum += *r;
        ++defined;
      }
    }
    if (defined == 0)
      throw CalibrationError("calibration: no defined radius at spacing " + std::to_string(delta));
    knots.emplace_back(delta, sum / defined);
  }
  std::sort(knots.begin(), knots.end());
  LiftCalibration cal;
  for (const auto& [d, r] : knots) {
    if (!cal.rbar.empty() && r <= cal.rbar.back()) continue;  // drop non-increasing knots
    cal.spacing.push_back(d);
    cal.rbar.push_back(r);
  }
  if (cal.spacing.size() < 4)
    throw CalibrationError("calibration: fewer than 4 strictly increasing knots survived (" +
                           std::to_string(cal.spacing.size()) + ")");
  return cal;
}

// Geometric lift: table-corrected spacing, then the lattice builder.
inline NetworkState lift_geometric(double R_target, int K, const LiftCalibration& cal) {
  if (!(R_target > 0.0)) throw std::invalid_argument("lift_geometric: target must be positive");
  const double delta = cal.invert(R_target);
  return lattice_state(K, delta);
}

struct AnnealingParams {
  double theta0 = 0.01;       // initial pseudo-temperature
  double cooling = 0.9;       // applied every `plateau` iterations
  int plateau = 200;
  int inner_steps = 3;        // majority steps per proposal
  double tol = 0.002;         // stop when |r_min - target| drops below
  int max_iter = 3000;        // total annealing iterations across restarts
  int max_restarts = 200;
  int iters_per_restart = 60;
  double engage_factor = 3.0; // restart anneals only if E0 <= engage_factor * tol
};

struct AnnealResult {
  NetworkState state;
  double r_min = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
  int restarts = 0;
};

namespace efm_detail {

// Measured mean first-loop radius of iid states at density d on K=10^4
// sites with 50 landmarks; used only to aim restart densities, so the
// mild K and landmark dependence does not matter.
inline double aim_density(double R_target, int K) {
  static constexpr double kD[] = {0.05, 0.08, 0.10, 0.15, 0.20, 0.30, 0.40,
                                  0.50, 0.60, 0.70, 0.80, 0.90, 0.95};
  static constexpr double kR[] = {0.03091, 0.01704, 0.01478, 0.00894, 0.00655,
                                  0.00408, 0.00292, 0.00207, 0.00148, 0.00137,
                                  0.00102, 0.00077, 0.00064};
  constexpr int n = static_cast<int>(sizeof(kD) / sizeof(kD[0]));
  double active;
  if (R_target >= kR[0]) {
    active = kD[0] * 1e4;
  } else if (R_target <= kR[n - 1]) {
    active = kD[n - 1] * 1e4;
  } else {
    int i = 0;
    while (R_target < kR[i + 1]) ++i;  // kR decreasing
    const double w = (std::log(R_target) - std::log(kR[i])) /
                     (std::log(kR[i + 1]) - std::log(kR[i]));
    active = 1e4 * std::exp(std::log(kD[i]) + w * (std::log(kD[i + 1]) - std::log(kD[i])));
  }
  return std::min(0.95, std::max(0.05, active / K));
}

}  // namespace efm_detail

// Metropolis search for a configuration with r_min near the target.
// Proposals evolve the current state a few majority steps, so the chain
// drifts toward the dynamics' attractor; restarts with fresh densities
// cover targets the drift cannot reach.  Restart densities are aimed at
// the target through the measured radius-vs-density curve of iid states,
// widened multiplicatively restart over restart, with a periodic fully
// random draw as a safety net.  Restarts whose starting energy is far
// off are abandoned immediately to save the iteration budget.
inline AnnealResult lift_annealing(double R_target, const ErGraph& g, double epsilon,
                                   int n_landmarks, const AnnealingParams& ap,
                                   std::uint64_t seed) {
  if (!(R_target > 0.0)) throw std::invalid_argument("lift_annealing: target must be positive");
  AnnealResult best;
  int total_iters = 0;
  double theta = ap.theta0;
  int plateau_count = 0;
  const double d_aim = efm_detail::aim_density(R_target, g.n);
  for (int restart = 0; restart < ap.max_restarts && total_iters < ap.max_iter; ++restart) {
    best.restarts = restart + 1;
    RngStream rng = derive_stream(seed, stream_purpose::anneal, static_cast<std::uint64_t>(restart));
    RngStream lm = derive_stream(seed, stream_purpose::landmarks,
                                 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(restart));
    double d0;
    if (restart % 6 == 5) {
      d0 = 0.05 + 0.90 * rng.next_double();
    } else {
      const double spread = 0.06 * (1 + restart / 6) * (2.0 * rng.next_double() - 1.0);
      d0 = std::min(0.95, std::max(0.05, d_aim * std::exp(spread)));
    }
    NetworkState cur = init_state(g.n, d0, rng);
    auto cur_r = try_restrict_state(cur, n_landmarks, lm);
    if (!cur_r) continue;
    double cur_E = std::fabs(*cur_r - R_target);
    if (cur_E < best.energy) best = AnnealResult{cur, *cur_r, cur_E, false, total_iters, restart + 1};
    if (cur_E < ap.tol) {
      best.converged = true;
      return best;
    }
    if (cur_E > ap.engage_factor * ap.tol) continue;
    for (int it = 0; it < ap.iters_per_restart && total_iters < ap.max_iter; ++it) {
      ++total_iters;
      ++plateau_count;
      if (plateau_count == ap.plateau) {
        plateau_count = 0;
        theta *= ap.cooling;
      }
      NetworkState prop = cur;
      evolve(g, prop, epsilon, ap.inner_steps, rng);
      const auto prop_r = try_restrict_state(prop, n_landmarks, lm);
      if (!prop_r) continue;
      const double prop_E = std::fabs(*prop_r - R_target);
      const bool accept =
          prop_E < cur_E || rng.next_double() < std::exp(-(prop_E - cur_E) / theta);
      if (accept) {
        cur = std::move(prop);
        cur_E = prop_E;
        cur_r = prop_r;
      }
      if (prop_E < best.energy)
        best = AnnealResult{accept ? cur : prop, *prop_r, prop_E, false, total_iters, restart + 1};
      if (best.energy < ap.tol) {
        best.converged = true;
        best.iterations = total_iters;
        return best;
      }
    }
  }
  best.iterations = total_iters;
  best.converged = best.energy < ap.tol;
  return best;
}

namespace efm_detail {

struct RealizationOut {
  std::optional<double> r;
  double d = std::numeric_limits<double>::quiet_NaN();
};

// One lift-evolve-restrict realization with purpose-keyed streams.
inline RealizationOut run_realization(double R, double epsilon, int T, const EnsembleSpec& spec,
                                      LiftMode mode, const LiftCalibration* cal,
                                      const ErGraph* pinned, const AnnealingParams* ap,
                                      std::uint64_t seed, std::uint64_t j) {
  ErGraph local;
  const ErGraph* g = pinned;
  if (spec.graph_policy == GraphPolicy::regenerate) {
    RngStream gs = derive_stream(seed, stream_purpose::graph, j);
    local = generate_er(spec.K, spec.p, gs.next_u64());
    g = &local;
  }
  NetworkState s;
  if (mode == LiftMode::geometric) {
    s = lift_geometric(R, spec.K, *cal);
  } else {
    RngStream as = derive_stream(seed, stream_purpose::anneal, j * 0x10001ULL);
    s = lift_annealing(R, *g, epsilon, spec.n_landmarks, *ap, as.next_u64()).state;
  }
  RngStream dyn = derive_stream(seed, stream_purpose::dynamics, j);
  evolve(*g, s, epsilon, T, dyn);
  RngStream lm = derive_stream(seed, stream_purpose::landmarks, j);
  RealizationOut out;
  out.d = density(s);
  out.r = try_restrict_state(s, spec.n_landmarks, lm);
  return out;
}

struct StepOut {
  double R_mean = std::numeric_limits<double>::quiet_NaN();
  double D_mean = std::numeric_limits<double>::quiet_NaN();
  int defined = 0;
};

inline StepOut coarse_step_full(double R, double epsilon, int T, const EnsembleSpec& spec,
                                LiftMode mode, const LiftCalibration* cal, const ErGraph* pinned,
                                const AnnealingParams* ap, std::uint64_t seed, int threads) {
  std::vector<RealizationOut> outs(static_cast<std::size_t>(spec.N));
  parallel_for(spec.N, threads, [&](int j) {
    outs[static_cast<std::size_t>(j)] = run_realization(R, epsilon, T, spec, mode, cal, pinned, ap,
                                                        seed, static_cast<std::uint64_t>(j));
  });
  StepOut so;
  double r_sum = 0.0, d_sum = 0.0;
  for (int j = 0; j < spec.N; ++j) {  // index order: thread-count invariant
    d_sum += outs[static_cast<std::size_t>(j)].d;
    if (outs[static_cast<std::size_t>(j)].r) {
      r_sum += *outs[static_cast<std::size_t>(j)].r;
      ++so.defined;
    }
  }
  so.D_mean = d_sum / spec.N;
  if (2 * (spec.N - so.defined) > spec.N) throw DegenerateEnsembleError{};
  if (so.defined > 0) so.R_mean = r_sum / so.defined;
  return so;
}

}  // namespace efm_detail

// F_T: ensemble mean of restrict(evolve(lift(R))).
inline double coarse_step(double R, double epsilon, int T, const EnsembleSpec& spec, LiftMode mode,
                          const LiftCalibration* cal, const ErGraph* pinned_graph = nullptr,
                          const AnnealingParams* ap = nullptr, int threads = 1) {
  static const AnnealingParams default_ap{};
  return efm_detail::coarse_step_full(R, epsilon, T, spec, mode, cal, pinned_graph,
                                      ap ? ap : &default_ap, spec.master_seed, threads)
      .R_mean;
}

// Iterated coarse map; row 0 is the initial macrostate.
inline CoarseSeries coarse_trajectory(double R0, double epsilon, int T, int n_macro_steps,
                                      const EnsembleSpec& spec, LiftMode mode,
                                      const LiftCalibration* cal,
                                      const ErGraph* pinned_graph = nullptr,
                                      const AnnealingParams* ap = nullptr, int threads = 1) {
  static const AnnealingParams default_ap{};
  const AnnealingParams* a = ap ? ap : &default_ap;
  CoarseSeries cs;
  cs.times.push_back(0);
  cs.R.push_back(R0);
  cs.D.push_back(std::numeric_limits<double>::quiet_NaN());
  cs.defined.push_back(spec.N);
  double R = R0;
  for (int n = 1; n <= n_macro_steps; ++n) {
    // per-step seed keeps realizations independent across macro steps
    const std::uint64_t step_seed = mix64(spec.master_seed ^ (0xc0a232c5ULL + 977ULL * n));
    const auto so = efm_detail::coarse_step_full(R, epsilon, T, spec, mode, cal, pinned_graph, a,
                                                 step_seed, threads);
    R = so.R_mean;
    cs.times.push_back(static_cast<long long>(n) * T);
    cs.R.push_back(so.R_mean);
    cs.D.push_back(so.D_mean);
    cs.defined.push_back(so.defined);
  }
  return cs;
}

// Baseline for the coarse stepper: N full microscopic trajectories,
// averaged per step.  Row 0 measures the initial states.
inline CoarseSeries ensemble_series(const EnsembleSpec& spec, int n_steps, int threads = 1) {
  struct Traj {
    std::vector<double> d;
    std::vector<std::optional<double>> r;
  };
  std::vector<Traj> trajs(static_cast<std::size_t>(spec.N));
  ErGraph shared;
  if (spec.graph_policy == GraphPolicy::pinned) {
    RngStream gs = derive_stream(spec.master_seed, stream_purpose::graph, 0);
    shared = generate_er(spec.K, spec.p, gs.next_u64());
  }
  parallel_for(spec.N, threads, [&](int j) {
    const auto ju = static_cast<std::uint64_t>(j);
    ErGraph local;
    const ErGraph* g = &shared;
    if (spec.graph_policy == GraphPolicy::regenerate) {
      RngStream gs = derive_stream(spec.master_seed, stream_purpose::graph, ju);
      local = generate_er(spec.K, spec.p, gs.next_u64());
      g = &local;
    }
    RngStream init = derive_stream(spec.master_seed, stream_purpose::init, ju);
    NetworkState s = init_state(spec.K, spec.params.d0, init);
    RngStream dyn = derive_stream(spec.master_seed, stream_purpose::dynamics, ju);
    RngStream lm = derive_stream(spec.master_seed, stream_purpose::landmarks, ju);
    Traj& tr = trajs[static_cast<std::size_t>(j)];
    const auto rows = rmin_series(*g, s, spec.params.epsilon, n_steps, spec.n_landmarks, dyn, lm);
    for (const auto& row : rows) {
      tr.d.push_back(row.d);
      tr.r.push_back(row.r_min);
    }
  });
  CoarseSeries cs;
  for (int t = 1; t <= n_steps; ++t) {
    double r_sum = 0.0, d_sum = 0.0;
    int defined = 0;
    for (int j = 0; j < spec.N; ++j) {
      d_sum += trajs[static_cast<std::size_t>(j)].d[static_cast<std::size_t>(t - 1)];
      const auto& r = trajs[static_cast<std::size_t>(j)].r[static_cast<std::size_t>(t - 1)];
      if (r) {
        r_sum += *r;
        ++defined;
      }
    }
    cs.times.push_back(t);
    cs.D.push_back(d_sum / spec.N);
    cs.R.push_back(defined > 0 ? r_sum / defined : std::numeric_limits<double>::quiet_NaN());
    cs.defined.push_back(defined);
  }
  return cs;
}

}  // namespace topodyn
