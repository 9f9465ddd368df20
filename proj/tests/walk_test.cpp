#include "geowalk/walk.hpp"

#include <gtest/gtest.h>

#include <set>

#include "geowalk/point_process.hpp"

using namespace geowalk;

namespace {

Network ten_vertex_network() {
  Rng rng(10);
  std::vector<Point> v;
  for (int i = 0; i < 10; ++i) v.push_back({rng.uniform(0, 4), rng.uniform(0, 4), 0});
  std::set<std::pair<int, int>> e;
  for (int i = 1; i < 10; ++i) e.insert({static_cast<int>(rng.below(i)), i});
  for (int k = 0; k < 8; ++k) {
    int a = static_cast<int>(rng.below(10)), b = static_cast<int>(rng.below(10));
    if (a != b) e.insert({std::min(a, b), std::max(a, b)});
  }
  return assign_conductances(graph_from_edges(2, v, {e.begin(), e.end()}), ConductanceModel::exponential(0.5));
}

Network ppp_network(std::uint64_t seed, int dim, double side) {
  const auto s = sample_ppp(Window::cube(dim, 0, side, 3), 1.0, seed);
  const auto t = delaunay(s.points, dim, s.window);
  return assign_conductances(trim_to_analysis_region(delaunay_graph(t), s.window), ConductanceModel::unit());
}

}  // namespace

TEST(AliasTable, ReproducesWeights) {
  const std::vector<double> w{0.1, 2.0, 0.7, 0.7, 5.5};
  const AliasTable t(w);
  double total = 0.0;
  for (double x : w) total += x;
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(t.probability(i), w[i] / total, 1e-12);
}

TEST(Walk, TwoVertexNetworkAlternates) {
  const auto net = assign_conductances(graph_from_edges(2, {{0, 0, 0}, {1, 0, 0}}, {{0, 1}}), ConductanceModel::unit());
  StopRule rule;
  rule.max_steps = 101;
  const auto s = simulate_walk(net, 0, rule, 5);
  EXPECT_EQ(s.steps, 101u);
  EXPECT_EQ(s.returns, 50u);
  EXPECT_EQ(s.final_vertex, 1);
}

TEST(Walk, StarTransitionsAreUniform) {
  std::vector<Point> v{{0, 0, 0}};
  std::vector<std::pair<int, int>> e;
  for (int k = 0; k < 5; ++k) {
    v.push_back({std::cos(k * 1.2566), std::sin(k * 1.2566), 0});
    e.push_back({0, k + 1});
  }
  const auto net = assign_conductances(graph_from_edges(2, v, e), ConductanceModel::unit());
  const Walker w(net);
  Rng rng(3);
  std::vector<int> count(6, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++count[w.step(0, rng)];
  for (int k = 1; k <= 5; ++k) {
    const double se = std::sqrt(0.2 * 0.8 / n);
    EXPECT_NEAR(count[k] / double(n), 0.2, 3 * se);
  }
}

TEST(Walk, TransitionTableIsReversible) {
  const auto net = ppp_network(2, 2, 10);
  for (const auto& e : net.graph.edges) {
    const double lhs = net.weight[e.u] * transition_probability(net, e.u, e.v);
    const double rhs = net.weight[e.v] * transition_probability(net, e.v, e.u);
    ASSERT_NEAR(lhs, rhs, 1e-14 * lhs);
  }
}

TEST(Walk, IsolatedStartIsRejected) {
  const auto net = assign_conductances(graph_from_edges(2, {{0, 0, 0}, {1, 0, 0}, {3, 3, 0}}, {{0, 1}}), ConductanceModel::unit());
  StopRule rule;
  rule.max_steps = 3;
  EXPECT_THROW(simulate_walk(net, 2, rule, 1), UsageError);
}

TEST(Walk, SameSeedSameWalk) {
  const auto net = ppp_network(4, 2, 12);
  StopRule rule;
  rule.exit_n = 5;
  rule.center = {6, 6, 0};
  const int start = nearest_vertex(net.graph, rule.center);
  const auto a = simulate_walk(net, start, rule, 99);
  const auto b = simulate_walk(net, start, rule, 99);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.final_vertex, b.final_vertex);
  EXPECT_TRUE(a.escaped);
  EXPECT_EQ(a.exit_index, 5);
}

TEST(EscapeIdentity, TenVertexNetwork) {
  const auto net = ten_vertex_network();
  const std::vector<int> Z{7, 9};
  const int x0 = 0;
  const double R = effective_resistance(net, {x0}, Z).value;
  const auto est = escape_probability_to(net, x0, Z, 100000, 17, 0);
  const double expected = 1.0 / (net.weight[x0] * R);
  EXPECT_NEAR(est.estimate, expected, 3 * std::sqrt(expected * (1 - expected) / 100000));
}

TEST(EscapeIdentity, ProfileOnPoissonNetwork) {
  for (int dim = 2; dim <= 3; ++dim) {
    const double side = dim == 2 ? 20 : 10;
    const auto net = ppp_network(11 + dim, dim, side);
    const Point c{side / 2, side / 2, dim == 3 ? side / 2 : 0};
    const auto prof = recurrence_profile(net, c, {2, 3, 4}, 40000, 7, 0);
    for (const auto& row : prof.rows) EXPECT_LT(row.identity_z, 3.0) << "dim " << dim << " n " << row.n;
  }
}

TEST(EscapeProfile, NonincreasingInN) {
  const auto net = ppp_network(5, 2, 20);
  const Point c{10, 10, 0};
  const int x0 = nearest_vertex(net.graph, c);
  const auto p = escape_profile(net, x0, c, {2, 4, 6, 8}, 5000, 3, 0);
  for (std::size_t i = 1; i < p.size(); ++i) EXPECT_LE(p[i].successes, p[i - 1].successes);
  EXPECT_THROW(escape_profile(net, x0, c, {11}, 10, 3), RangeError);
}

TEST(EscapeProfile, ThreadCountDoesNotChangeResult) {
  const auto net = ppp_network(6, 2, 16);
  const Point c{8, 8, 0};
  const int x0 = nearest_vertex(net.graph, c);
  const auto a = escape_profile(net, x0, c, {3, 5}, 3000, 3, 1);
  const auto b = escape_profile(net, x0, c, {3, 5}, 3000, 3, 4);
  EXPECT_EQ(a[0].successes, b[0].successes);
  EXPECT_EQ(a[1].successes, b[1].successes);
}

TEST(RecurrenceProfile, SingleRowMatchesDirectSolve) {
  const auto net = ppp_network(8, 2, 16);
  const Point c{8, 8, 0};
  const auto prof = recurrence_profile(net, c, {4}, 0, 1);
  const auto term = annulus_terminals(net.graph, c, 0, 4);
  const auto r = effective_resistance(net, {prof.start}, term.outer);
  EXPECT_DOUBLE_EQ(prof.rows[0].resistance, r.value);
}

TEST(RecurrenceProfile, PlanarResistanceGrows) {
  const auto net = ppp_network(9, 2, 40);
  const auto prof = recurrence_profile(net, {20, 20, 0}, {2, 4, 8, 12, 16}, 0, 1);
  for (std::size_t i = 1; i < prof.rows.size(); ++i) EXPECT_GT(prof.rows[i].resistance, prof.rows[i - 1].resistance);
}
