#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "topodyn/graph.hpp"
#include "topodyn/rng.hpp"

namespace topodyn {

struct ModelParams {
  double epsilon = 0.2;  // anti-majority flip probability, in (0, 0.5)
  int T = 10;            // macroscopic step length
  double d0 = 0.1;       // initial activity density
};

inline void validate(const ModelParams& mp) {
  if (!(mp.epsilon > 0.0) || !(mp.epsilon < 0.5))
    throw std::invalid_argument("epsilon must lie in (0, 0.5)");
  if (mp.T < 0) throw std::invalid_argument("T must be nonnegative");
  if (!(mp.d0 >= 0.0) || !(mp.d0 <= 1.0)) throw std::invalid_argument("d0 must lie in [0, 1]");
}

struct NetworkState {
  std::vector<std::uint8_t> active;  // 0/1 per agent
  long long t = 0;
};

inline long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

// Exactly round_half_up(n * d0) agents active, chosen without replacement.
inline NetworkState init_state(int n, double d0, RngStream& rng) {
  if (!(d0 >= 0.0) || !(d0 <= 1.0)) throw std::invalid_argument("d0 must lie in [0, 1]");
  const long long m = round_half_up(static_cast<double>(n) * d0);
  NetworkState s;
  s.active.assign(static_cast<std::size_t>(n), 0);
  s.t = 0;
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
  for (long long k = 0; k < m; ++k) {
    const std::uint64_t j = k + rng.next_below(static_cast<std::uint64_t>(n) - k);
    std::swap(ids[static_cast<std::size_t>(k)], ids[static_cast<std::size_t>(j)]);
    s.active[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])] = 1;
  }
  return s;
}

inline double density(const NetworkState& s) {
  long long c = 0;
  for (auto b : s.active) c += b;
  return s.active.empty() ? 0.0 : static_cast<double>(c) / static_cast<double>(s.active.size());
}

inline long long active_count(const NetworkState& s) {
  long long c = 0;
  for (auto b : s.active) c += b;
  return c;
}

// One synchronous update.  An inactive agent activates with probability
// epsilon when at most half of its neighbors are active, otherwise with
// 1 - epsilon; active agents mirror this against inactive neighbors.
// Degree-0 agents sit in the at-most-half branch.  Exactly one draw per
// agent per step, so replay positions never depend on the state.
inline void majority_step(const ErGraph& g, NetworkState& s, double epsilon, RngStream& rng) {
  if (static_cast<int>(s.active.size()) != g.n)
    throw std::invalid_argument("majority_step: state length does not match graph");
  std::vector<std::uint8_t> next(s.active.size());
  for (int v = 0; v < g.n; ++v) {
    int cnt = 0;
    for (const int* it = g.begin(v); it != g.end(v); ++it) cnt += s.active[static_cast<std::size_t>(*it)];
    const int deg = g.degree(v);
    const bool a = s.active[static_cast<std::size_t>(v)] != 0;
    // active: count on the inactive side; inactive: on the active side
    const int aligned = a ? (deg - cnt) : cnt;
    const double p_flip = (2 * aligned <= deg) ? epsilon : 1.0 - epsilon;
    const bool flip = rng.next_double() < p_flip;
    next[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(a ^ flip);
  }
  s.active.swap(next);
  s.t += 1;
}

inline void evolve(const ErGraph& g, NetworkState& s, double epsilon, int steps, RngStream& rng) {
  if (steps < 0) throw std::invalid_argument("evolve: negative step count");
  for (int k = 0; k < steps; ++k) majority_step(g, s, epsilon, rng);
}

}  // namespace topodyn
