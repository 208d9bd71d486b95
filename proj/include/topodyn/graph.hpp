#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "topodyn/rng.hpp"

namespace topodyn {

// Undirected simple graph in CSR form.  Neighbor lists are sorted and
// deduplicated; every edge appears in both endpoint rows.
struct ErGraph {
  int n = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> offsets;    // size n + 1
  std::vector<int> neighbors;  // size 2 * edge_count

  int degree(int v) const { return offsets[v + 1] - offsets[v]; }
  const int* begin(int v) const { return neighbors.data() + offsets[v]; }
  const int* end(int v) const { return neighbors.data() + offsets[v + 1]; }
  long long edge_count() const { return static_cast<long long>(neighbors.size()) / 2; }

  bool has_edge(int a, int b) const {
    return std::binary_search(begin(a), end(a), b);
  }
};

inline ErGraph csr_from_edges(int n, std::vector<std::pair<int, int>>& edges,
                              double p, std::uint64_t seed) {
  ErGraph g;
  g.n = n;
  g.p = p;
  g.seed = seed;
  g.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  for (auto& e : edges) {
    g.offsets[static_cast<std::size_t>(e.first) + 1]++;
    g.offsets[static_cast<std::size_t>(e.second) + 1]++;
  }
  for (int v = 0; v < n; ++v) g.offsets[static_cast<std::size_t>(v) + 1] += g.offsets[v];
  g.neighbors.resize(static_cast<std::size_t>(g.offsets[n]));
  std::vector<int> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (auto& e : edges) {
    g.neighbors[static_cast<std::size_t>(cursor[e.first]++)] = e.second;
    g.neighbors[static_cast<std::size_t>(cursor[e.second]++)] = e.first;
  }
  for (int v = 0; v < n; ++v) std::sort(g.neighbors.begin() + g.offsets[v], g.neighbors.begin() + g.offsets[v + 1]);
  return g;
}

// G(n, p) by skip sampling over the linearized pair sequence
// (0,1), (0,2), ..., (n-2, n-1); expected cost O(n + E).
inline ErGraph generate_er(int n, double p, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_er: need at least two vertices");
  if (!(p > 0.0) || !(p < 1.0)) throw std::invalid_argument("generate_er: p must lie in (0, 1)");
  RngStream rng(seed, stream_purpose::graph);
  const double log_q = std::log1p(-p);
  const long long total = static_cast<long long>(n) * (n - 1) / 2;
  std::vector<std::pair<int, int>> edges;
  long long idx = -1;
  int row = 0;
  long long row_start = 0;           // linear index of (row, row+1)
  long long row_len = n - 1;         // pairs remaining in this row
  while (true) {
    const double u = rng.next_double_open();
    const long long skip = (u >= 1.0) ? 0 : static_cast<long long>(std::floor(std::log(u) / log_q));
    idx += 1 + skip;
    if (idx >= total) break;
    while (idx >= row_start + row_len) {
      row_start += row_len;
      ++row;
      row_len = n - 1 - row;
    }
    const int col = row + 1 + static_cast<int>(idx - row_start);
    edges.emplace_back(row, col);
  }
  return csr_from_edges(n, edges, p, seed);
}

// Plain-text form: header "K p seed", then one "i j" line per edge, 0-based, i < j.
inline void dump_graph(const ErGraph& g, std::ostream& os) {
  os << g.n << ' ';
  char buf[32];
  auto* end = std::to_chars(buf, buf + sizeof buf, g.p).ptr;
  os.write(buf, end - buf);
  os << ' ' << g.seed << '\n';
  for (int i = 0; i < g.n; ++i)
    for (const int* it = g.begin(i); it != g.end(i); ++it)
      if (i < *it) os << i << ' ' << *it << '\n';
}

inline ErGraph load_graph(std::istream& is) {
  int n = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  if (!(is >> n >> p >> seed)) throw std::runtime_error("load_graph: bad header");
  std::vector<std::pair<int, int>> edges;
  int a = 0, b = 0;
  while (is >> a >> b) {
    if (a >= b || a < 0 || b >= n) throw std::runtime_error("load_graph: bad edge line");
    edges.emplace_back(a, b);
  }
  return csr_from_edges(n, edges, p, seed);
}

}  // namespace topodyn
