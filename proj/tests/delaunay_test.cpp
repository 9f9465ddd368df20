#include "geowalk/delaunay.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "support/generators.hpp"

using geowalk::ConstructionError;
using geowalk::Point;
using geowalk::Rng;
using geowalk::Triangulation;
namespace gt = geowalk::testing;
namespace pr = geowalk::predicates;

namespace {

Triangulation triangulate(const std::vector<Point>& pts, int dim) {
  return geowalk::delaunay(pts, dim, geowalk::bounding_window(pts, dim));
}

std::vector<std::array<int, 4>> simplex_set(const Triangulation& t) {
  std::vector<std::array<int, 4>> out;
  for (const auto& s : t.simplices) out.push_back(gt::canonical(s, t.dimension));
  std::sort(out.begin(), out.end());
  return out;
}

// Structural checks: positive orientation, symmetric facet adjacency, and
// no vertex strictly inside any circumsphere (exact, unperturbed).
void expect_valid(const Triangulation& t) {
  const int m = t.simplex_size();
  for (std::size_t s = 0; s < t.size(); ++s) {
    std::array<const Point*, 4> q{};
    for (int k = 0; k < m; ++k) q[k] = &t.vertices[t.simplices[s][k]];
    if (t.dimension == 2)
      ASSERT_EQ(pr::orient<2>({q[0], q[1], q[2]}), 1);
    else
      ASSERT_EQ(pr::orient<3>({q[0], q[1], q[2], q[3]}), 1);
    for (int k = 0; k < m; ++k) {
      const int nb = t.neighbors[s][k];
      if (nb < 0) continue;
      int back = 0;
      for (int j = 0; j < m; ++j) back += t.neighbors[nb][j] == static_cast<int>(s);
      ASSERT_EQ(back, 1);
      std::set<int> shared;
      for (int j = 0; j < m; ++j)
        if (j != k) shared.insert(t.simplices[s][j]);
      int common = 0;
      for (int j = 0; j < m; ++j) common += shared.count(t.simplices[nb][j]);
      ASSERT_EQ(common, m - 1);
    }
    for (std::size_t w = 0; w < t.vertices.size(); ++w) {
      const int inside = t.dimension == 2 ? pr::in_sphere_exact<2>({q[0], q[1], q[2]}, t.vertices[w])
                                          : pr::in_sphere_exact<3>({q[0], q[1], q[2], q[3]}, t.vertices[w]);
      ASSERT_LE(inside, 0) << "vertex " << w << " inside simplex " << s;
    }
  }
}

double simplex_volume(const Triangulation& t, std::size_t s) {
  const auto& v = t.simplices[s];
  const Point& a = t.vertices[v[0]];
  if (t.dimension == 2) {
    const Point& b = t.vertices[v[1]];
    const Point& c = t.vertices[v[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
  }
  const Point& b = t.vertices[v[1]];
  const Point& c = t.vertices[v[2]];
  const Point& d = t.vertices[v[3]];
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double w[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double x[3] = {d[0] - a[0], d[1] - a[1], d[2] - a[2]};
  return (u[0] * (w[1] * x[2] - w[2] * x[1]) - u[1] * (w[0] * x[2] - w[2] * x[0]) + u[2] * (w[0] * x[1] - w[1] * x[0])) /
         6.0;
}

}  // namespace

TEST(Delaunay, ThreePointsGiveOneTriangle) {
  const std::vector<Point> pts{{0, 0, 0}, {1, 0, 0}, {0.3, 0.8, 0}};
  const auto t = triangulate(pts, 2);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(geowalk::delaunay_edges(t).size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(t.neighbors[0][k], -1);
}

TEST(Delaunay, FourPointsGiveOneTetrahedron) {
  const std::vector<Point> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.2, 0.3, 1}};
  const auto t = triangulate(pts, 3);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(geowalk::delaunay_edges(t).size(), 6u);
}

TEST(Delaunay, CircumcenterEquidistant) {
  const std::vector<Point> pts{{0, 0, 0}, {4, 0, 0}, {0, 3, 0}};
  const auto t = triangulate(pts, 2);
  EXPECT_NEAR(t.circumcenters[0][0], 2.0, 1e-12);
  EXPECT_NEAR(t.circumcenters[0][1], 1.5, 1e-12);
  EXPECT_NEAR(t.circumradii[0], 2.5, 1e-12);
}

TEST(Delaunay, MatchesBruteForceSmall2D) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.below(8);
    auto pts = gt::uniform_points(rng, n, 2);
    const auto t = triangulate(pts, 2);
    ASSERT_EQ(simplex_set(t), gt::brute_force_delaunay(pts, 2)) << "trial " << trial;
  }
}

TEST(Delaunay, MatchesBruteForceSmall3D) {
  Rng rng(4048);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(5);
    auto pts = gt::uniform_points(rng, n, 3);
    const auto t = triangulate(pts, 3);
    ASSERT_EQ(simplex_set(t), gt::brute_force_delaunay(pts, 3)) << "trial " << trial;
  }
}

TEST(Delaunay, JitteredGridMatchesBruteForceEdges) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> pts;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) pts.push_back({i + 1e-3 * rng.uniform(-1, 1), j + 1e-3 * rng.uniform(-1, 1), 0});
    const auto t = triangulate(pts, 2);
    const auto brute = gt::brute_force_delaunay(pts, 2);
    std::set<std::pair<int, int>> edges;
    for (const auto& s : brute)
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) edges.insert({std::min(s[a], s[b]), std::max(s[a], s[b])});
    const auto got = geowalk::delaunay_edges(t);
    const std::set<std::pair<int, int>> got_set(got.begin(), got.end());
    EXPECT_EQ(got_set, edges);
  }
}

TEST(Delaunay, ExactGridIsResolvedConsistently) {
  std::vector<Point> pts;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) pts.push_back({double(i), double(j), 0});
  const auto t = triangulate(pts, 2);
  expect_valid(t);
  // 2n - 2 - h triangles with all 8 boundary points on the hull.
  EXPECT_EQ(t.size(), 8u);
  double area = 0.0;
  for (std::size_t s = 0; s < t.size(); ++s) area += simplex_volume(t, s);
  EXPECT_DOUBLE_EQ(area, 4.0);
}

TEST(Delaunay, LatticeDegeneraciesProduceValidTriangulations) {
  Rng rng(5);
  for (int trial = 0; trial < 150; ++trial) {
    const int dim = 2 + trial % 2;
    auto pts = gt::lattice_points(rng, dim == 2 ? 30 : 25, dim, dim == 2 ? 7 : 4);
    Triangulation t;
    try {
      t = triangulate(pts, dim);
    } catch (const ConstructionError&) {
      continue;
    }
    expect_valid(t);
    // Every point is a vertex of some simplex.
    std::vector<char> used(pts.size(), 0);
    for (const auto& s : t.simplices)
      for (int k = 0; k <= dim; ++k) used[s[k]] = 1;
    for (auto u : used) ASSERT_TRUE(u);
  }
}

TEST(Delaunay, EmptyCircumsphereOnLargerSamples) {
  Rng rng(77);
  for (int dim = 2; dim <= 3; ++dim) {
    auto pts = gt::uniform_points(rng, 200, dim);
    const auto t = triangulate(pts, dim);
    expect_valid(t);
  }
}

TEST(Delaunay, VolumeEqualsHullVolumeOfCube) {
  Rng rng(13);
  auto pts = gt::uniform_points(rng, 500, 3);
  for (int c = 0; c < 8; ++c) pts.push_back({double(c & 1), double((c >> 1) & 1), double((c >> 2) & 1)});
  const auto t = triangulate(pts, 3);
  double vol = 0.0;
  for (std::size_t s = 0; s < t.size(); ++s) vol += simplex_volume(t, s);
  EXPECT_NEAR(vol, 1.0, 1e-9);
}

TEST(Delaunay, CollinearInputIsRejected) {
  std::vector<Point> pts;
  for (int i = 0; i < 6; ++i) pts.push_back({double(i), 2.0 * i, 0});
  EXPECT_THROW(triangulate(pts, 2), ConstructionError);
  std::vector<Point> planar;
  for (int i = 0; i < 6; ++i) planar.push_back({double(i), double(i * i % 5), 0});
  EXPECT_THROW(triangulate(planar, 3), ConstructionError);
}

TEST(Delaunay, DuplicatePointIsRejected) {
  const std::vector<Point> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.4, 0.4, 0}, {0.4, 0.4, 0}};
  EXPECT_THROW(triangulate(pts, 2), ConstructionError);
}

TEST(Delaunay, TooFewPointsAreRejected) {
  const std::vector<Point> pts{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(triangulate(pts, 2), ConstructionError);
}

TEST(Delaunay, TrustFlagsFollowCircumballContainment) {
  Rng rng(1);
  auto pts = gt::uniform_points(rng, 400, 2, 0.0, 10.0);
  const auto window = geowalk::Window::cube(2, 2.0, 6.0, 2.0);
  const auto t = geowalk::delaunay(pts, 2, window);
  std::size_t trusted = 0;
  for (std::size_t s = 0; s < t.size(); ++s) {
    const bool inside = window.extended_contains_ball(t.circumcenters[s], t.circumradii[s]);
    EXPECT_EQ(static_cast<bool>(t.trusted[s]), inside);
    trusted += inside;
  }
  EXPECT_GT(trusted, t.size() / 2);
}
