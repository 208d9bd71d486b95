#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "topodyn/circle.hpp"
#include "topodyn/homology.hpp"
#include "topodyn/rng.hpp"

using namespace topodyn;

namespace {

SimplicialComplex hollow_triangle() {
  SimplicialComplex K;
  K.vertices = {0, 1, 2};
  K.edges = {{0, 1}, {0, 2}, {1, 2}};
  return K;
}

SimplicialComplex filled_triangle() {
  SimplicialComplex K = hollow_triangle();
  K.triangles = {{0, 1, 2}};
  return K;
}

// Rank oracle: the GF(2) column span of a rank-r matrix has 2^r elements.
// Columns as row-bitmasks, every subset XOR enumerated.
int span_rank(const std::vector<std::uint32_t>& cols) {
  std::set<std::uint32_t> span;
  const std::size_t subsets = std::size_t{1} << cols.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    std::uint32_t x = 0;
    for (std::size_t c = 0; c < cols.size(); ++c)
      if (mask & (std::size_t{1} << c)) x ^= cols[c];
    span.insert(x);
  }
  int r = 0;
  while ((std::size_t{1} << r) < span.size()) ++r;
  REQUIRE((std::size_t{1} << r) == span.size());
  return r;
}

Gf2Matrix matrix_from_cols(int rows, const std::vector<std::uint32_t>& cols) {
  Gf2Matrix m(rows, static_cast<int>(cols.size()));
  for (int c = 0; c < static_cast<int>(cols.size()); ++c)
    for (int r = 0; r < rows; ++r)
      if (cols[static_cast<std::size_t>(c)] & (1u << r)) m.set(r, c);
  return m;
}

long long uf_components(const SimplicialComplex& K) {
  std::vector<int> parent(K.vertices.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  auto index_of = [&](int v) {
    return static_cast<int>(std::lower_bound(K.vertices.begin(), K.vertices.end(), v) -
                            K.vertices.begin());
  };
  long long comps = static_cast<long long>(K.vertices.size());
  for (const auto& [a, b] : K.edges) {
    const int ra = find(index_of(a));
    const int rb = find(index_of(b));
    if (ra != rb) {
      parent[static_cast<std::size_t>(ra)] = rb;
      --comps;
    }
  }
  return comps;
}

// Random complex on up to 12 vertices, optionally with gaps in the id
// space; triangles drawn from edge-closed triples only.
SimplicialComplex random_complex(RngStream& rng, bool with_triangles) {
  const int n = 1 + static_cast<int>(rng.next_below(12));
  const bool gapped = rng.bernoulli(0.3);
  SimplicialComplex K;
  for (int i = 0; i < n; ++i) K.vertices.push_back(gapped ? 3 * i + 1 : i);
  const double q = 0.15 + 0.35 * rng.next_double();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(q))
        K.edges.emplace_back(K.vertices[static_cast<std::size_t>(i)],
                             K.vertices[static_cast<std::size_t>(j)]);
  if (with_triangles) {
    auto has_edge = [&](int a, int b) {
      return std::binary_search(K.edges.begin(), K.edges.end(), std::make_pair(a, b));
    };
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
          const int a = K.vertices[static_cast<std::size_t>(i)];
          const int b = K.vertices[static_cast<std::size_t>(j)];
          const int c = K.vertices[static_cast<std::size_t>(k)];
          if (has_edge(a, b) && has_edge(a, c) && has_edge(b, c) && rng.bernoulli(0.5))
            K.triangles.push_back({a, b, c});
        }
  }
  validate(K);
  return K;
}

bool boundary_product_is_zero(const SimplicialComplex& K) {
  const Gf2Matrix d1 = boundary_matrix(K, 1);
  const Gf2Matrix d2 = boundary_matrix(K, 2);
  for (int j = 0; j < d2.cols; ++j)
    for (int r = 0; r < d1.rows; ++r) {
      bool bit = false;
      for (int e = 0; e < d1.cols; ++e)
        if (d2.get(e, j) && d1.get(r, e)) bit = !bit;
      if (bit) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("complex validation rejects malformed inputs") {
  SimplicialComplex K;
  K.vertices = {2, 1};
  REQUIRE_THROWS_AS(validate(K), std::invalid_argument);
  K.vertices = {1, 2};
  K.edges = {{2, 1}};
  REQUIRE_THROWS_AS(validate(K), std::invalid_argument);
  K.edges = {{1, 3}};
  REQUIRE_THROWS_AS(validate(K), std::invalid_argument);  // endpoint not a vertex
  K.vertices = {1, 2, 3};
  K.edges = {{1, 2}, {1, 3}};
  K.triangles = {{1, 2, 3}};
  REQUIRE_THROWS_AS(validate(K), std::invalid_argument);  // face {2,3} missing
  K.edges = {{1, 2}, {1, 3}, {2, 3}};
  REQUIRE_NOTHROW(validate(K));
}

TEST_CASE("boundary matrices on the canonical small complexes") {
  {
    const Gf2Matrix d1 = boundary_matrix(hollow_triangle(), 1);
    REQUIRE(d1.rows == 3);
    REQUIRE(d1.cols == 3);
    for (int c = 0; c < 3; ++c) {
      int ones = 0;
      for (int r = 0; r < 3; ++r) ones += d1.get(r, c);
      REQUIRE(ones == 2);
    }
  }
  {
    const Gf2Matrix d2 = boundary_matrix(filled_triangle(), 2);
    REQUIRE(d2.rows == 3);
    REQUIRE(d2.cols == 1);
    REQUIRE(d2.get(0, 0));
    REQUIRE(d2.get(1, 0));
    REQUIRE(d2.get(2, 0));
  }
  {
    SimplicialComplex K;
    K.vertices = {0, 1};
    K.edges = {{0, 1}};
    const Gf2Matrix d1 = boundary_matrix(K, 1);
    REQUIRE(d1.rows == 2);
    REQUIRE(d1.cols == 1);
    REQUIRE(d1.get(0, 0));
    REQUIRE(d1.get(1, 0));
  }
  REQUIRE_THROWS_AS(boundary_matrix(hollow_triangle(), 0), std::invalid_argument);
  REQUIRE_THROWS_AS(boundary_matrix(hollow_triangle(), 3), std::invalid_argument);
}

TEST_CASE("boundary_matrix surfaces closure violations") {
  SimplicialComplex K;  // triangle whose face {1,2} is missing; validate bypassed
  K.vertices = {0, 1, 2};
  K.edges = {{0, 1}, {0, 2}};
  K.triangles = {{0, 1, 2}};
  REQUIRE_THROWS_AS(boundary_matrix(K, 2), std::invalid_argument);
}

TEST_CASE("gf2_rank on fixed matrices") {
  REQUIRE(gf2_rank(Gf2Matrix(4, 3)) == 0);
  Gf2Matrix eye(5, 5);
  for (int i = 0; i < 5; ++i) eye.set(i, i);
  REQUIRE(gf2_rank(eye) == 5);
  REQUIRE(gf2_rank(boundary_matrix(hollow_triangle(), 1)) == 2);
}

TEST_CASE("gf2_rank agrees with the span-size oracle on random matrices") {
  RngStream rng(606, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const int rows = 1 + static_cast<int>(rng.next_below(10));
    const int cols = 1 + static_cast<int>(rng.next_below(9));
    std::vector<std::uint32_t> colmasks;
    for (int c = 0; c < cols; ++c)
      colmasks.push_back(static_cast<std::uint32_t>(rng.next_u64()) & ((1u << rows) - 1u));
    REQUIRE(gf2_rank(matrix_from_cols(rows, colmasks)) == span_rank(colmasks));
  }
}

TEST_CASE("Betti numbers on the canonical small complexes") {
  {
    const BettiProfile b = betti_numbers(hollow_triangle());
    REQUIRE(b.betti0 == 1);
    REQUIRE(b.betti1 == 1);
  }
  {
    const BettiProfile b = betti_numbers(filled_triangle());
    REQUIRE(b.betti0 == 1);
    REQUIRE(b.betti1 == 0);
  }
  {
    SimplicialComplex K;  // two disjoint hollow triangles
    K.vertices = {0, 1, 2, 10, 11, 12};
    K.edges = {{0, 1}, {0, 2}, {1, 2}, {10, 11}, {10, 12}, {11, 12}};
    const BettiProfile b = betti_numbers(K);
    REQUIRE(b.betti0 == 2);
    REQUIRE(b.betti1 == 2);
  }
}

TEST_CASE("random complexes: component count, cycle space, boundary square") {
  RngStream rng(20260822, 1);
  int checked = 0;
  while (checked < 200) {
    const bool with_triangles = checked % 2 == 1;
    const SimplicialComplex K = random_complex(rng, with_triangles);
    const BettiProfile b = betti_numbers(K);
    const long long comps = uf_components(K);
    REQUIRE(b.betti0 == comps);
    if (!K.vertices.empty()) REQUIRE(b.betti0 >= 1);
    if (K.triangles.empty()) {
      REQUIRE(b.betti1 == static_cast<long long>(K.edges.size()) -
                              static_cast<long long>(K.vertices.size()) + comps);
    } else {
      REQUIRE(b.betti1 >= 0);
      REQUIRE(boundary_product_is_zero(K));
    }
    ++checked;
  }
}

TEST_CASE("vr_complex at radius zero keeps only vertices") {
  std::vector<int> ids = {0, 3, 5, 9};
  auto dist = [](int a, int b) { return arc_dist(a / 16.0, b / 16.0); };
  const SimplicialComplex K = vr_complex(ids, 0.0, dist);
  REQUIRE(K.vertices.size() == 4);
  REQUIRE(K.edges.empty());
  REQUIRE(K.triangles.empty());
  REQUIRE(betti_numbers(K).betti0 == 4);
  REQUIRE_THROWS_AS(vr_complex(ids, -0.1, dist), std::invalid_argument);
}

TEST_CASE("eight equidistant circle points form the 8-cycle just past half spacing") {
  std::vector<int> ids;
  for (int i = 0; i < 8; ++i) ids.push_back(i);
  auto dist = [](int a, int b) { return arc_dist(a / 8.0, b / 8.0); };
  const double g = kArc / 8.0;

  const SimplicialComplex below = vr_complex(ids, g / 2.0 - 1e-12, dist);
  REQUIRE(below.edges.empty());

  const SimplicialComplex cyc = vr_complex(ids, g / 2.0 + 1e-12, dist);
  REQUIRE(cyc.edges.size() == 8);
  REQUIRE(cyc.triangles.empty());
  const BettiProfile b = betti_numbers(cyc);
  REQUIRE(b.betti0 == 1);
  REQUIRE(b.betti1 == 1);
}

TEST_CASE("three consecutive arc points at half spacing form a path") {
  std::vector<int> ids = {0, 1, 2};
  const double gfrac = 0.01;
  auto dist = [&](int a, int b) { return arc_dist(a * gfrac, b * gfrac); };
  const double g = kArc * gfrac;
  const SimplicialComplex K = vr_complex(ids, g / 2.0, dist);
  REQUIRE(K.edges.size() == 2);  // the span pair 0-2 sits at distance 2g > 2r
  const BettiProfile b = betti_numbers(K);
  REQUIRE(b.betti0 == 1);
  REQUIRE(b.betti1 == 0);
}

TEST_CASE("vr complexes grow monotonically and satisfy closure") {
  RngStream rng(17, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(8));
    std::vector<int> ids;
    std::vector<double> pos;
    for (int i = 0; i < n; ++i) {
      ids.push_back(i);
      pos.push_back(rng.next_double());
    }
    auto dist = [&](int a, int b) {
      return arc_dist(pos[static_cast<std::size_t>(a)], pos[static_cast<std::size_t>(b)]);
    };
    const double r1 = 0.3 * rng.next_double();
    const double r2 = r1 + 0.3 * rng.next_double();
    const SimplicialComplex K1 = vr_complex(ids, r1, dist);
    const SimplicialComplex K2 = vr_complex(ids, r2, dist);
    validate(K1);
    validate(K2);
    for (const auto& e : K1.edges)
      REQUIRE(std::binary_search(K2.edges.begin(), K2.edges.end(), e));
    for (const auto& t : K1.triangles)
      REQUIRE(std::binary_search(K2.triangles.begin(), K2.triangles.end(), t));
    if (!K1.triangles.empty()) REQUIRE(boundary_product_is_zero(K1));
  }
}
