#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "topodyn/circle.hpp"
#include "topodyn/dynamics.hpp"
#include "topodyn/graph.hpp"
#include "topodyn/homology.hpp"
#include "topodyn/rng.hpp"

namespace topodyn {

struct NoLoopError : std::runtime_error {
  NoLoopError() : std::runtime_error("no 1-dimensional hole at any candidate radius") {}
};

// Active agents at time t, as sorted agent ids plus circumference fractions.
struct WitnessSet {
  int K = 0;
  std::vector<int> ids;        // strictly increasing
  std::vector<double> pos;     // fractions id/K, same order

  static WitnessSet from_state(const NetworkState& s) {
    WitnessSet z;
    z.K = static_cast<int>(s.active.size());
    for (int i = 0; i < z.K; ++i)
      if (s.active[static_cast<std::size_t>(i)]) {
        z.ids.push_back(i);
        z.pos.push_back(static_cast<double>(i) / static_cast<double>(z.K));
      }
    return z;
  }
  int size() const { return static_cast<int>(z_size()); }
  std::size_t z_size() const { return ids.size(); }
};

struct LandmarkSet {
  std::vector<int> ids;        // agent ids in selection order
  std::vector<double> pos;     // fractions, same order
  bool clamped = false;        // requested count exceeded |Z|
};

// Maxmin greedy selection: first landmark uniform over Z, each next one
// maximizes min arc distance to the chosen set; exact ties are broken
// uniformly.  n > |Z| clamps to |Z|.
inline LandmarkSet select_landmarks(const WitnessSet& Z, int n, RngStream& rng) {
  const int m = Z.size();
  if (m == 0) throw std::invalid_argument("select_landmarks: empty witness set");
  if (n < 1) throw std::invalid_argument("select_landmarks: need at least one landmark");
  LandmarkSet L;
  if (n > m) {
    n = m;
    L.clamped = true;
  }
  std::vector<double> d2s(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  std::vector<int> argmax;
  int pick = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m)));
  for (int k = 0; k < n; ++k) {
    taken[static_cast<std::size_t>(pick)] = 1;
    L.ids.push_back(Z.ids[static_cast<std::size_t>(pick)]);
    L.pos.push_back(Z.pos[static_cast<std::size_t>(pick)]);
    if (k + 1 == n) break;
    const double pp = Z.pos[static_cast<std::size_t>(pick)];
    double best = -1.0;
    for (int i = 0; i < m; ++i) {
      double& d = d2s[static_cast<std::size_t>(i)];
      const double cand = arc_dist(Z.pos[static_cast<std::size_t>(i)], pp);
      if (cand < d) d = cand;
      if (!taken[static_cast<std::size_t>(i)] && d > best) best = d;
    }
    argmax.clear();
    for (int i = 0; i < m; ++i)
      if (!taken[static_cast<std::size_t>(i)] && d2s[static_cast<std::size_t>(i)] == best)
        argmax.push_back(i);
    pick = argmax[static_cast<std::size_t>(
        rng.next_below(static_cast<std::uint64_t>(argmax.size())))];
  }
  return L;
}

// Shared between every birth computation so edge membership, candidate
// radii and r_min agree bit for bit.  da, db are witness-to-landmark arc
// distances, dxL the witness's distance to the whole landmark set.
inline double birth_value(double da, double db, double dxL) {
  const double m = da > db ? da : db;
  const double v = m - dxL;
  return v > 0.0 ? 0.5 * v : 0.0;
}

namespace witness_detail {

// min over landmarks of arc_dist(x, l); exact, O(|L|).
inline double dist_to_set(double x, const std::vector<double>& lpos) {
  double best = std::numeric_limits<double>::infinity();
  for (double lp : lpos) {
    const double d = arc_dist(x, lp);
    if (d < best) best = d;
  }
  return best;
}

// Dense upper-triangular edge-birth table over landmark indices in
// id-sorted order; infinity marks "no witness certifies this pair".
struct BirthTable {
  int m = 0;
  std::vector<double> birth;  // m*m, row-major, i < j used
  double& at(int i, int j) { return birth[static_cast<std::size_t>(i) * m + j]; }
  double at(int i, int j) const { return birth[static_cast<std::size_t>(i) * m + j]; }
};

struct SortedLandmarks {
  std::vector<int> order_ids;     // landmark agent ids, ascending
  std::vector<double> order_pos;  // fractions, same order
};

inline SortedLandmarks sort_landmarks(const LandmarkSet& L) {
  const int m = static_cast<int>(L.ids.size());
  std::vector<int> perm(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::sort(perm.begin(), perm.end(),
            [&](int a, int b) { return L.ids[static_cast<std::size_t>(a)] < L.ids[static_cast<std::size_t>(b)]; });
  SortedLandmarks s;
  for (int i : perm) {
    s.order_ids.push_back(L.ids[static_cast<std::size_t>(i)]);
    s.order_pos.push_back(L.pos[static_cast<std::size_t>(i)]);
  }
  return s;
}

// Exact births for every pair: O(|L|^2 |Z|).  Reference path and the
// fallback for small instances.
inline BirthTable births_full(const WitnessSet& Z, const SortedLandmarks& L) {
  const int m = static_cast<int>(L.order_ids.size());
  BirthTable t;
  t.m = m;
  t.birth.assign(static_cast<std::size_t>(m) * m, std::numeric_limits<double>::infinity());
  std::vector<double> dx(static_cast<std::size_t>(m));
  for (std::size_t w = 0; w < Z.z_size(); ++w) {
    const double px = Z.pos[w];
    double dxL = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      dx[static_cast<std::size_t>(i)] = arc_dist(px, L.order_pos[static_cast<std::size_t>(i)]);
      if (dx[static_cast<std::size_t>(i)] < dxL) dxL = dx[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        const double v = birth_value(dx[static_cast<std::size_t>(i)],
                                     dx[static_cast<std::size_t>(j)], dxL);
        if (v < t.at(i, j)) t.at(i, j) = v;
      }
  }
  return t;
}

// Births capped at `cap`: a pair can only have birth <= cap through a
// witness whose distances to both landmarks are within dxL + 2*cap, so
// each witness touches only landmarks in a circular window around it.
// Entries <= cap are exact (bit-identical to births_full); everything
// else stays infinity.
inline BirthTable births_capped(const WitnessSet& Z, const SortedLandmarks& L, double cap) {
  const int m = static_cast<int>(L.order_ids.size());
  BirthTable t;
  t.m = m;
  t.birth.assign(static_cast<std::size_t>(m) * m, std::numeric_limits<double>::infinity());

  // landmarks sorted by position, remembering their id-order index
  std::vector<int> byp(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) byp[static_cast<std::size_t>(i)] = i;
  std::sort(byp.begin(), byp.end(), [&](int a, int b) {
    return L.order_pos[static_cast<std::size_t>(a)] < L.order_pos[static_cast<std::size_t>(b)];
  });
  std::vector<double> sp(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    sp[static_cast<std::size_t>(i)] = L.order_pos[static_cast<std::size_t>(byp[static_cast<std::size_t>(i)])];

  std::vector<std::pair<double, int>> win;  // (arc to witness, id-order index)
  for (std::size_t w = 0; w < Z.z_size(); ++w) {
    const double px = Z.pos[w];
    // nearest landmark by wrapped binary search
    const auto it = std::lower_bound(sp.begin(), sp.end(), px);
    double dxL = std::numeric_limits<double>::infinity();
    const int c = static_cast<int>(it - sp.begin());
    for (int off = -1; off <= 0; ++off) {
      const int k = ((c + off) % m + m) % m;
      const double d = arc_dist(px, sp[static_cast<std::size_t>(k)]);
      if (d < dxL) dxL = d;
    }
    const double wrad = dxL + 2.0 * cap;
    win.clear();
    if (wrad >= 0.5 * kArc) {
      for (int k = 0; k < m; ++k)
        win.emplace_back(arc_dist(px, sp[static_cast<std::size_t>(k)]),
                         byp[static_cast<std::size_t>(k)]);
    } else {
      // walk outward from the insertion point in both directions; the
      // window spans under half the circle, so wrapped distance grows
      // monotonically along each walk
      for (int step = 0; step < m; ++step) {
        const int k = ((c + step) % m + m) % m;
        const double d = arc_dist(px, sp[static_cast<std::size_t>(k)]);
        if (d > wrad) break;
        win.emplace_back(d, byp[static_cast<std::size_t>(k)]);
      }
      for (int step = 1; step < m && static_cast<int>(win.size()) < m; ++step) {
        const int k = ((c - step) % m + m) % m;
        const double d = arc_dist(px, sp[static_cast<std::size_t>(k)]);
        if (d > wrad) break;
        win.emplace_back(d, byp[static_cast<std::size_t>(k)]);
      }
    }
    for (std::size_t a = 0; a < win.size(); ++a)
      for (std::size_t b = a + 1; b < win.size(); ++b) {
        const double v = birth_value(win[a].first, win[b].first, dxL);
        if (v <= cap) {
          const int i = std::min(win[a].second, win[b].second);
          const int j = std::max(win[a].second, win[b].second);
          if (v < t.at(i, j)) t.at(i, j) = v;
        }
      }
  }
  return t;
}

}  // namespace witness_detail

// Every possible birth threshold: the clamped halved witness margins over
// all landmark pairs and witnesses, deduplicated and ascending.
inline std::vector<double> candidate_radii(const WitnessSet& Z, const LandmarkSet& L) {
  const auto S = witness_detail::sort_landmarks(L);
  const int m = static_cast<int>(S.order_ids.size());
  std::vector<double> out;
  std::vector<double> dx(static_cast<std::size_t>(m));
  for (std::size_t w = 0; w < Z.z_size(); ++w) {
    const double px = Z.pos[w];
    double dxL = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      dx[static_cast<std::size_t>(i)] = arc_dist(px, S.order_pos[static_cast<std::size_t>(i)]);
      if (dx[static_cast<std::size_t>(i)] < dxL) dxL = dx[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j)
        out.push_back(birth_value(dx[static_cast<std::size_t>(i)],
                                  dx[static_cast<std::size_t>(j)], dxL));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Lazy-witness complex at ball radius r: edge {a,b} iff some witness x
// has max(d(a,x), d(b,x)) <= 2r + d(x,L); triangles fill whenever their
// three edges are present.
inline SimplicialComplex lazy_witness_complex(const WitnessSet& Z, const LandmarkSet& L, double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("lazy_witness_complex: radius must be nonnegative");
  const auto S = witness_detail::sort_landmarks(L);
  const auto births = witness_detail::births_full(Z, S);
  const int m = births.m;
  SimplicialComplex K;
  K.vertices = S.order_ids;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (births.at(i, j) <= r) {
        K.edges.emplace_back(S.order_ids[static_cast<std::size_t>(i)],
                             S.order_ids[static_cast<std::size_t>(j)]);
        adj[static_cast<std::size_t>(i)].push_back(j);
      }
  for (int i = 0; i < m; ++i)
    for (std::size_t a = 0; a < adj[static_cast<std::size_t>(i)].size(); ++a)
      for (std::size_t b = a + 1; b < adj[static_cast<std::size_t>(i)].size(); ++b) {
        const int j = adj[static_cast<std::size_t>(i)][a];
        const int k = adj[static_cast<std::size_t>(i)][b];
        if (births.at(j, k) <= r)
          K.triangles.push_back({S.order_ids[static_cast<std::size_t>(i)],
                                 S.order_ids[static_cast<std::size_t>(j)],
                                 S.order_ids[static_cast<std::size_t>(k)]});
      }
  return K;
}

namespace witness_detail {

struct UnionFind {
  std::vector<int> parent;
  int comps = 0;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)), comps(n) {
    for (int i = 0; i < n; ++i) parent[static_cast<std::size_t>(i)] = i;
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(a)] = b;
    --comps;
    return true;
  }
};

// Incremental first-hole scan over an edge-birth table.  Edges enter in
// birth order, equal births together; triangles fill lazily as their last
// edge arrives; beta1 = E - rank d1 - rank d2 checked per birth group.
inline std::optional<double> first_hole_radius(const BirthTable& births) {
  const int m = births.m;
  struct E {
    double b;
    int i, j;
  };
  std::vector<E> edges;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (births.at(i, j) < std::numeric_limits<double>::infinity())
        edges.push_back({births.at(i, j), i, j});
  std::sort(edges.begin(), edges.end(), [](const E& a, const E& b) {
    if (a.b != b.b) return a.b < b.b;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  UnionFind uf(m);
  const int bw = (m + 63) / 64;  // adjacency bitset words
  std::vector<std::uint64_t> adj(static_cast<std::size_t>(m) * bw, 0);
  std::vector<int> eid(static_cast<std::size_t>(m) * m, -1);
  int edge_count = 0;
  // column basis for the triangle boundary image, over edge-id bit space
  const int max_edges = m * (m - 1) / 2;
  const int cw = (max_edges + 63) / 64;
  std::vector<std::vector<std::uint64_t>> basis;
  std::vector<int> basis_pivot;
  int rank2 = 0;

  std::vector<std::uint64_t> colbuf(static_cast<std::size_t>(cw));
  auto reduce_add = [&](std::vector<std::uint64_t>& col) {
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const int p = basis_pivot[k];
      if ((col[static_cast<std::size_t>(p >> 6)] >> (p & 63)) & 1)
        for (int w = 0; w < cw; ++w) col[static_cast<std::size_t>(w)] ^= basis[k][static_cast<std::size_t>(w)];
    }
    int pivot = -1;
    for (int w = 0; w < cw; ++w)
      if (col[static_cast<std::size_t>(w)]) {
        pivot = w * 64 + __builtin_ctzll(col[static_cast<std::size_t>(w)]);
        break;
      }
    if (pivot >= 0) {
      basis.push_back(col);
      basis_pivot.push_back(pivot);
      ++rank2;
    }
  };

  std::size_t k = 0;
  while (k < edges.size()) {
    const double b = edges[k].b;
    std::size_t end = k;
    while (end < edges.size() && edges[end].b == b) ++end;
    for (std::size_t e = k; e < end; ++e) {
      const int i = edges[e].i;
      const int j = edges[e].j;
      eid[static_cast<std::size_t>(i) * m + j] = edge_count;
      ++edge_count;
      uf.unite(i, j);
      // triangles completed by this edge: common neighbors of i and j
      for (int w = 0; w < bw; ++w) {
        std::uint64_t common = adj[static_cast<std::size_t>(i) * bw + w] &
                               adj[static_cast<std::size_t>(j) * bw + w];
        while (common) {
          const int c = w * 64 + __builtin_ctzll(common);
          common &= common - 1;
          const int e1 = eid[static_cast<std::size_t>(i) * m + j];
          const int e2 = eid[static_cast<std::size_t>(std::min(i, c)) * m + std::max(i, c)];
          const int e3 = eid[static_cast<std::size_t>(std::min(j, c)) * m + std::max(j, c)];
          std::fill(colbuf.begin(), colbuf.end(), 0);
          colbuf[static_cast<std::size_t>(e1 >> 6)] ^= std::uint64_t{1} << (e1 & 63);
          colbuf[static_cast<std::size_t>(e2 >> 6)] ^= std::uint64_t{1} << (e2 & 63);
          colbuf[static_cast<std::size_t>(e3 >> 6)] ^= std::uint64_t{1} << (e3 & 63);
          reduce_add(colbuf);
        }
      }
      adj[static_cast<std::size_t>(i) * bw + (j >> 6)] |= std::uint64_t{1} << (j & 63);
      adj[static_cast<std::size_t>(j) * bw + (i >> 6)] |= std::uint64_t{1} << (i & 63);
    }
    const long long beta1 = static_cast<long long>(edge_count) - (m - uf.comps) - rank2;
    if (beta1 >= 1) return b;
    k = end;
  }
  return std::nullopt;
}

}  // namespace witness_detail

// Smallest candidate radius whose lazy-witness complex has a 1-hole.
// beta1 is not monotone in r, so the scan walks births in ascending
// order; the capped table keeps the common case cheap, escalating the
// cap only when no hole exists below it.
inline std::optional<double> try_min_betti1_radius(const WitnessSet& Z, const LandmarkSet& L) {
  if (L.ids.size() < 3) return std::nullopt;
  const auto S = witness_detail::sort_landmarks(L);
  const double full = 0.5 * kArc;  // witness margins never exceed pi
  double cap = 8.0 * kArc / static_cast<double>(std::max<std::size_t>(Z.z_size(), 1));
  if (cap < 1e-12) cap = 1e-12;
  while (true) {
    const bool covers_all = cap >= 0.5 * full;
    const auto births = covers_all ? witness_detail::births_full(Z, S)
                                   : witness_detail::births_capped(Z, S, cap);
    const auto hole = witness_detail::first_hole_radius(births);
    if (hole) return hole;
    if (covers_all) return std::nullopt;
    cap *= 4.0;
  }
}

inline double min_betti1_radius(const WitnessSet& Z, const LandmarkSet& L) {
  if (L.ids.size() < 3) throw std::invalid_argument("min_betti1_radius: need at least 3 landmarks");
  const auto r = try_min_betti1_radius(Z, L);
  if (!r) throw NoLoopError{};
  return *r;
}

struct RminRow {
  long long t = 0;
  double d = 0.0;
  std::optional<double> r_min;
  int landmark_count = 0;
};

// One majority step per row, then a fresh landmark selection and hole
// scan; rows where |Z| < 3 or no hole exists leave r_min absent.
inline std::vector<RminRow> rmin_series(const ErGraph& g, NetworkState& s, double epsilon,
                                        int n_steps, int n_landmarks, RngStream& dyn_rng,
                                        RngStream& landmark_rng) {
  std::vector<RminRow> rows;
  rows.reserve(static_cast<std::size_t>(n_steps));
  for (int step = 0; step < n_steps; ++step) {
    majority_step(g, s, epsilon, dyn_rng);
    RminRow row;
    row.t = s.t;
    row.d = density(s);
    const auto Z = WitnessSet::from_state(s);
    if (Z.size() >= 3) {
      auto L = select_landmarks(Z, n_landmarks, landmark_rng);
      row.landmark_count = static_cast<int>(L.ids.size());
      row.r_min = try_min_betti1_radius(Z, L);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace topodyn
