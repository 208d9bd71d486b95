#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace topodyn {

// Simplicial complex truncated at dimension 2.  Simplices are stored
// sorted: vertex list ascending, edge pairs (a < b) in lexicographic
// order, triangles (a < b < c) likewise.
struct SimplicialComplex {
  std::vector<int> vertices;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::array<int, 3>> triangles;
};

inline void validate(const SimplicialComplex& K) {
  auto sorted_unique = [](const auto& v) {
    return std::is_sorted(v.begin(), v.end()) && std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  if (!sorted_unique(K.vertices) || !sorted_unique(K.edges) || !sorted_unique(K.triangles))
    throw std::invalid_argument("complex: simplex lists must be sorted and duplicate-free");
  auto has_vertex = [&](int v) {
    return std::binary_search(K.vertices.begin(), K.vertices.end(), v);
  };
  for (const auto& [a, b] : K.edges) {
    if (a >= b) throw std::invalid_argument("complex: edge endpoints must satisfy a < b");
    if (!has_vertex(a) || !has_vertex(b))
      throw std::invalid_argument("complex: edge endpoint missing from vertex list");
  }
  auto has_edge = [&](int a, int b) {
    return std::binary_search(K.edges.begin(), K.edges.end(), std::make_pair(a, b));
  };
  for (const auto& t : K.triangles) {
    if (!(t[0] < t[1] && t[1] < t[2]))
      throw std::invalid_argument("complex: triangle ids must be strictly increasing");
    if (!has_edge(t[0], t[1]) || !has_edge(t[0], t[2]) || !has_edge(t[1], t[2]))
      throw std::invalid_argument("complex: triangle face missing from edge list");
  }
}

// Bit matrix over GF(2), column-major: column j occupies words
// [j*words_per_col, (j+1)*words_per_col).
struct Gf2Matrix {
  int rows = 0;
  int cols = 0;
  int words_per_col = 0;
  std::vector<std::uint64_t> data;

  Gf2Matrix() = default;
  Gf2Matrix(int r, int c)
      : rows(r), cols(c), words_per_col(r > 0 ? (r + 63) / 64 : 0),
        data(static_cast<std::size_t>(words_per_col) * static_cast<std::size_t>(c), 0) {
    if (r < 0 || c < 0) throw std::invalid_argument("Gf2Matrix: negative shape");
  }

  void set(int r, int c) {
    data[static_cast<std::size_t>(c) * words_per_col + static_cast<std::size_t>(r >> 6)] |=
        std::uint64_t{1} << (r & 63);
  }
  bool get(int r, int c) const {
    return (data[static_cast<std::size_t>(c) * words_per_col + static_cast<std::size_t>(r >> 6)] >>
            (r & 63)) & 1;
  }
  std::uint64_t* col(int c) { return data.data() + static_cast<std::size_t>(c) * words_per_col; }
  const std::uint64_t* col(int c) const {
    return data.data() + static_cast<std::size_t>(c) * words_per_col;
  }
};

namespace gf2_detail {

inline void xor_into(std::uint64_t* dst, const std::uint64_t* src, int words) {
  for (int w = 0; w < words; ++w) dst[w] ^= src[w];
}

inline int lowest_set_bit(const std::uint64_t* col, int words) {
  for (int w = 0; w < words; ++w)
    if (col[w]) return w * 64 + __builtin_ctzll(col[w]);
  return -1;
}

}  // namespace gf2_detail

// Rank via column elimination; the input is taken by value and consumed.
inline int gf2_rank(Gf2Matrix m) {
  const int words = m.words_per_col;
  std::vector<std::pair<int, int>> pivots;  // (pivot row, column index)
  pivots.reserve(static_cast<std::size_t>(std::min(m.rows, m.cols)));
  for (int c = 0; c < m.cols; ++c) {
    std::uint64_t* col = m.col(c);
    for (const auto& [pr, pc] : pivots)
      if ((col[pr >> 6] >> (pr & 63)) & 1) gf2_detail::xor_into(col, m.col(pc), words);
    const int pivot = gf2_detail::lowest_set_bit(col, words);
    if (pivot >= 0) pivots.emplace_back(pivot, c);
  }
  return static_cast<int>(pivots.size());
}

// Rows of the k-th boundary matrix are (k-1)-simplices in stored order,
// columns are k-simplices; face lookups resolve through binary search.
inline Gf2Matrix boundary_matrix(const SimplicialComplex& K, int k) {
  if (k != 1 && k != 2) throw std::invalid_argument("boundary_matrix: k must be 1 or 2");
  if (k == 1) {
    Gf2Matrix m(static_cast<int>(K.vertices.size()), static_cast<int>(K.edges.size()));
    auto row_of = [&](int v) {
      const auto it = std::lower_bound(K.vertices.begin(), K.vertices.end(), v);
      if (it == K.vertices.end() || *it != v)
        throw std::invalid_argument("boundary_matrix: edge endpoint not a vertex");
      return static_cast<int>(it - K.vertices.begin());
    };
    for (int j = 0; j < static_cast<int>(K.edges.size()); ++j) {
      m.set(row_of(K.edges[static_cast<std::size_t>(j)].first), j);
      m.set(row_of(K.edges[static_cast<std::size_t>(j)].second), j);
    }
    return m;
  }
  Gf2Matrix m(static_cast<int>(K.edges.size()), static_cast<int>(K.triangles.size()));
  auto row_of = [&](int a, int b) {
    const auto key = std::make_pair(a, b);
    const auto it = std::lower_bound(K.edges.begin(), K.edges.end(), key);
    if (it == K.edges.end() || *it != key)
      throw std::invalid_argument("boundary_matrix: triangle face not an edge");
    return static_cast<int>(it - K.edges.begin());
  };
  for (int j = 0; j < static_cast<int>(K.triangles.size()); ++j) {
    const auto& t = K.triangles[static_cast<std::size_t>(j)];
    m.set(row_of(t[0], t[1]), j);
    m.set(row_of(t[0], t[2]), j);
    m.set(row_of(t[1], t[2]), j);
  }
  return m;
}

struct BettiProfile {
  long long betti0 = 0;
  long long betti1 = 0;
};

// betti0 = |V| - rank d1; betti1 = (|E| - rank d1) - rank d2.
inline BettiProfile betti_numbers(const SimplicialComplex& K) {
  const int r1 = gf2_rank(boundary_matrix(K, 1));
  const int r2 = gf2_rank(boundary_matrix(K, 2));
  BettiProfile b;
  b.betti0 = static_cast<long long>(K.vertices.size()) - r1;
  b.betti1 = (static_cast<long long>(K.edges.size()) - r1) - r2;
  return b;
}

// Rips complex at ball radius r: simplex threshold is d <= 2r, truncated
// at triangles.  ids index into an external point set; dist(i, j) must be
// a metric on those ids.
template <class Dist>
SimplicialComplex vr_complex(const std::vector<int>& ids, double r, Dist&& dist) {
  if (!(r >= 0.0)) throw std::invalid_argument("vr_complex: radius must be nonnegative");
  SimplicialComplex K;
  K.vertices = ids;
  std::sort(K.vertices.begin(), K.vertices.end());
  const int n = static_cast<int>(K.vertices.size());
  const double thresh = 2.0 * r;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (dist(K.vertices[static_cast<std::size_t>(i)], K.vertices[static_cast<std::size_t>(j)]) <=
          thresh) {
        K.edges.emplace_back(K.vertices[static_cast<std::size_t>(i)],
                             K.vertices[static_cast<std::size_t>(j)]);
        adj[static_cast<std::size_t>(i)].push_back(j);
      }
  for (int i = 0; i < n; ++i)
    for (std::size_t a = 0; a < adj[static_cast<std::size_t>(i)].size(); ++a)
      for (std::size_t b = a + 1; b < adj[static_cast<std::size_t>(i)].size(); ++b) {
        const int j = adj[static_cast<std::size_t>(i)][a];
        const int k = adj[static_cast<std::size_t>(i)][b];
        if (dist(K.vertices[static_cast<std::size_t>(j)], K.vertices[static_cast<std::size_t>(k)]) <=
            thresh)
          K.triangles.push_back({K.vertices[static_cast<std::size_t>(i)],
                                 K.vertices[static_cast<std::size_t>(j)],
                                 K.vertices[static_cast<std::size_t>(k)]});
      }
  return K;
}

}  // namespace topodyn
