#include "geowalk/network.hpp"

#include <gtest/gtest.h>
#include <gmpxx.h>

#include <map>
#include <numeric>
#include <set>

#include "geowalk/point_process.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace geowalk;
using geowalk::testing::matrix_tree_resistance;
using geowalk::testing::random_network;

namespace {

GeometricGraph path_graph(int n) {
  std::vector<Point> v;
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) v.push_back({double(i), 0, 0});
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return graph_from_edges(2, v, e);
}

Network ppp_network(std::uint64_t seed, int dim, double side, const ConductanceModel& model) {
  const auto s = sample_ppp(Window::cube(dim, 0, side, 3), 1.0, seed);
  const auto t = delaunay(s.points, dim, s.window);
  return assign_conductances(trim_to_analysis_region(delaunay_graph(t), s.window), model);
}

}  // namespace

TEST(Conductance, UnitModelGivesDegreeWeights) {
  Rng rng(1);
  auto net = random_network(rng, 8);
  net = assign_conductances(net.graph, ConductanceModel::unit());
  for (double c : net.conductance) EXPECT_EQ(c, 1.0);
  const auto adj = adjacency(net.graph);
  for (std::size_t u = 0; u < net.size(); ++u) EXPECT_EQ(net.weight[u], static_cast<double>(adj[u].size()));
}

TEST(Conductance, ExponentialAtZeroLengthIsOne) {
  EXPECT_EQ(ConductanceModel::exponential(2.0)(0.0), 1.0);
  EXPECT_EQ(ConductanceModel::power(3.0)(0.0), 1.0);
}

TEST(Conductance, DecreasingKindsAreMonotone) {
  for (const auto& m : {ConductanceModel::exponential(0.7), ConductanceModel::power(2.5)}) {
    double prev = m(0.0);
    for (double r = 0.01; r < 20; r += 0.01) {
      ASSERT_LE(m(r), prev);
      prev = m(r);
    }
  }
}

TEST(Conductance, InvalidModelsAreRejected) {
  EXPECT_THROW(ConductanceModel::constant(0.0).validate(), ParameterError);
  EXPECT_THROW(ConductanceModel::exponential(-1.0).validate(), ParameterError);
  // Underflow to zero conductance on a very long edge.
  auto g = graph_from_edges(2, {{0, 0, 0}, {1e4, 0, 0}}, {{0, 1}});
  EXPECT_THROW(assign_conductances(g, ConductanceModel::exponential(1.0)), ParameterError);
}

TEST(Resistance, SeriesAndParallel) {
  const auto series = assign_conductances(path_graph(3), ConductanceModel::unit());
  EXPECT_NEAR(effective_resistance(series, 0, 2).value, 2.0, 1e-12);
  auto star = graph_from_edges(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1}, {0, 2}});
  const auto par = assign_conductances(star, ConductanceModel::unit());
  EXPECT_NEAR(effective_resistance(par, {0}, {1, 2}).value, 0.5, 1e-12);
}

TEST(Resistance, MatchesMatrixTreeOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(8));
    const auto net = random_network(rng, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(trial));
    const int na = 1 + static_cast<int>(rng.below(2)), nz = 1 + static_cast<int>(rng.below(2));
    if (na + nz > n) continue;
    std::vector<int> A(perm.begin(), perm.begin() + na), Z(perm.begin() + na, perm.begin() + na + nz);
    const double oracle = matrix_tree_resistance(net, A, Z);
    const auto got = effective_resistance(net, A, Z);
    ASSERT_NEAR(got.value, oracle, 1e-9 * oracle) << "trial " << trial;
    EXPECT_LE(got.relative_residual, 1e-10);
  }
}

TEST(Resistance, ReciprocityAndRayleighMonotonicity) {
  Rng rng(5);
  const auto net = ppp_network(3, 2, 12, ConductanceModel::exponential(1.0));
  const int a = nearest_vertex(net.graph, {2, 2, 0}), z = nearest_vertex(net.graph, {10, 9, 0});
  const double r = effective_resistance(net, a, z).value;
  EXPECT_NEAR(effective_resistance(net, z, a).value, r, 1e-9 * r);
  for (int k = 0; k < 20; ++k) {
    const auto e = rng.below(net.graph.edges.size());
    const auto cut = without_edge(net, e);
    const auto rr = effective_resistance(cut, a, z);
    if (rr.infinite) continue;
    EXPECT_GE(rr.value, r * (1 - 1e-9));
  }
}

TEST(Resistance, DisconnectedTerminalsGiveInfiniteSignal) {
  auto g = graph_from_edges(2, {{0, 0, 0}, {1, 0, 0}, {5, 0, 0}, {6, 0, 0}}, {{0, 1}, {2, 3}});
  const auto net = assign_conductances(g, ConductanceModel::unit());
  const auto r = effective_resistance(net, 0, 3);
  EXPECT_TRUE(r.infinite);
  EXPECT_TRUE(std::isinf(r.value));
  EXPECT_THROW(effective_resistance(net, {0}, {0}), UsageError);
}

TEST(AnnulusBound, SingleSpanningEdge) {
  auto g = graph_from_edges(2, {{0.5, 0, 0}, {2.5, 0, 0}}, {{0, 1}});
  const auto net = assign_conductances(g, ConductanceModel::unit());
  const auto b = annulus_reduction_bound(net, {0, 0, 0}, 1, 2);
  ASSERT_EQ(b.r.size(), 2u);
  EXPECT_DOUBLE_EQ(b.r[0], 0.5);
  EXPECT_DOUBLE_EQ(b.r[1], 0.5);
  EXPECT_DOUBLE_EQ(b.bound, 1.0);
  const double exact = effective_resistance(net, 0, 1).value;
  EXPECT_NEAR(exact, 1.0, 1e-12);
  EXPECT_LE(b.bound, exact + 1e-12);
}

TEST(AnnulusBound, UnitSpanEdgesGiveParallelLaw) {
  // Spokes from the centre box to the first annulus, all crossing cut 1 only.
  std::vector<Point> v{{0.1, 0.1, 0}};
  std::vector<std::pair<int, int>> e;
  for (int k = 0; k < 5; ++k) {
    v.push_back({1.2 + 0.1 * k, 0.3, 0});
    e.push_back({0, k + 1});
  }
  const auto net = assign_conductances(graph_from_edges(2, v, e), ConductanceModel::unit());
  const auto b = annulus_reduction_bound(net, {0, 0, 0}, 1, 1);
  EXPECT_DOUBLE_EQ(b.r[0], 1.0 / 5.0);
}

TEST(AnnulusBound, RangeLeavingTrimmedRegionIsRejected) {
  const auto net = ppp_network(1, 2, 10, ConductanceModel::unit());
  EXPECT_THROW(annulus_reduction_bound(net, {5, 5, 0}, 1, 6), RangeError);
  EXPECT_NO_THROW(annulus_reduction_bound(net, {5, 5, 0}, 1, 5));
  EXPECT_THROW(annulus_reduction_bound(net, {5, 5, 0}, 3, 2), RangeError);
}

TEST(AnnulusBound, NeverExceedsExactResistance) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int dim = 2 + seed % 2;
    const double side = dim == 2 ? 20 : 10;
    const auto model = seed % 3 == 0 ? ConductanceModel::exponential(0.5) : ConductanceModel::unit();
    const auto net = ppp_network(seed, dim, side, model);
    const Point c{side / 2, side / 2, dim == 3 ? side / 2 : 0};
    const int imax = static_cast<int>(side / 2) - 1;
    int i0 = 1;
    auto term = annulus_terminals(net.graph, c, i0, imax);
    while (term.inner.empty()) term = annulus_terminals(net.graph, c, ++i0, imax);
    const auto b = annulus_reduction_bound(net, c, i0, imax);
    const auto r = effective_resistance(net, term.inner, term.outer);
    ASSERT_FALSE(r.infinite);
    ASSERT_LE(b.bound, r.value * (1 + 1e-9)) << "seed " << seed;
  }
}
