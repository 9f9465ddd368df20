#include "geowalk/criteria.hpp"

#include <gtest/gtest.h>

#include "geowalk/network.hpp"

using namespace geowalk;

namespace {

GeometricGraph ppp_graph(std::uint64_t seed, int dim, double side, GraphKind kind = GraphKind::DT) {
  const auto s = sample_ppp(Window::cube(dim, 0, side, 4), 1.0, seed);
  const auto t = delaunay(s.points, dim, s.window);
  return trim_to_analysis_region(build_graph(kind, s.points, t), s.window);
}

Point centre(int dim, double side) { return {side / 2, side / 2, dim == 3 ? side / 2 : 0}; }

}  // namespace

TEST(AnnulusStats, HandBuiltGraph) {
  // Annulus indices about the origin: 1, 2, 4, 3, 1.
  const auto g = graph_from_edges(2, {{0.5, 0, 0}, {1.5, 0, 0}, {3.2, 0, 0}, {0, 2.5, 0}, {0.2, 0.3, 0}},
                                  {{0, 1}, {0, 2}, {1, 3}, {0, 4}});
  const auto s = annulus_edge_stats(g, {0, 0, 0}, 1, 3);
  ASSERT_EQ(s.rows.size(), 3u);
  EXPECT_EQ(s.rows[0].count, 2u);
  EXPECT_EQ(s.rows[0].span_counts, (std::vector<std::size_t>{1, 0, 1}));
  EXPECT_DOUBLE_EQ(s.rows[0].max_length, 2.7);
  EXPECT_EQ(s.rows[1].count, 2u);
  EXPECT_EQ(s.rows[1].span_counts, (std::vector<std::size_t>{1, 0, 1}));
  EXPECT_DOUBLE_EQ(s.rows[1].max_length, std::hypot(1.5, 2.5));
  EXPECT_EQ(s.rows[2].count, 1u);
  EXPECT_EQ(s.rows[2].span_counts, (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(s.rows[0].weighted_span(), 4u);
  // The edge inside the first annulus appears nowhere.
  const int inner = detail::edge_index(g.edges, 0, 4);
  ASSERT_GE(inner, 0);
  for (const auto& row : s.rows) EXPECT_EQ(std::count(row.edges.begin(), row.edges.end(), inner), 0);
}

TEST(AnnulusStats, EdgeOfSpanJAppearsInJConsecutiveRows) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int dim = 2 + seed % 2;
    const double side = dim == 2 ? 24 : 12;
    const auto g = ppp_graph(seed, dim, side);
    const Point c = centre(dim, side);
    const int imax = static_cast<int>(side / 2);
    const auto s = annulus_edge_stats(g, c, 1, imax);
    const auto a = annulus_indices(g, c);
    std::vector<std::vector<int>> rows_of(g.edges.size());
    for (const auto& row : s.rows)
      for (int e : row.edges) rows_of[e].push_back(row.i);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const int lo = std::min(a[g.edges[e].u], a[g.edges[e].v]);
      const int hi = std::max(a[g.edges[e].u], a[g.edges[e].v]);
      if (hi > imax) continue;
      ASSERT_EQ(rows_of[e].size(), static_cast<std::size_t>(hi - lo));
      for (std::size_t k = 0; k < rows_of[e].size(); ++k) ASSERT_EQ(rows_of[e][k], lo + static_cast<int>(k));
    }
    for (const auto& row : s.rows) {
      std::size_t total = 0;
      for (auto n : row.span_counts) total += n;
      EXPECT_EQ(total, row.count);
      EXPECT_LE(row.span_counts.size(), static_cast<std::size_t>(std::ceil(row.max_length)));
      for (int e : row.edges) {
        const int a1 = std::min(a[g.edges[e].u], a[g.edges[e].v]);
        const int a2 = std::max(a[g.edges[e].u], a[g.edges[e].v]);
        EXPECT_TRUE(a1 <= row.i && row.i < a2);
      }
    }
  }
}

TEST(AnnulusStats, RangeOutsideTrimmedRegionIsRejected) {
  const auto g = ppp_graph(1, 2, 10);
  EXPECT_THROW(annulus_edge_stats(g, {5, 5, 0}, 1, 6), RangeError);
  EXPECT_THROW(annulus_edge_stats(g, {5, 5, 0}, 0, 3), RangeError);
}

TEST(RecurrenceSeries, UnitTermsSumToI) {
  std::vector<int> idx;
  std::vector<double> ones;
  for (int i = 1; i <= 50; ++i) {
    idx.push_back(i);
    ones.push_back(1.0);
  }
  const auto s = recurrence_series(idx, ones, ones, ones, 1.0);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    EXPECT_DOUBLE_EQ(s.coarse[k], idx[k]);
    EXPECT_DOUBLE_EQ(s.sharp[k], idx[k]);
  }
  EXPECT_NEAR(s.coarse_fit.log.r_squared, 0.0, 1.0);
}

TEST(RecurrenceSeries, LogEnvelopeSeriesGrowsLikeLogLog) {
  // L = sqrt(log i), N = i sqrt(log i): terms 1 / (i log i), whose partial
  // sums track log log I.
  std::vector<int> idx;
  std::vector<double> L, N;
  for (int i = 1; i <= 200000; ++i) {
    idx.push_back(i);
    const double l = std::sqrt(std::log(static_cast<double>(i)));
    L.push_back(l);
    N.push_back(i * l);
  }
  const auto s = recurrence_series(idx, L, N, N, 1.0);
  ASSERT_EQ(s.skipped, std::vector<int>{1});
  EXPECT_NEAR(s.coarse_fit.log_log.slope, 1.0, 0.05);
  EXPECT_GT(s.coarse_fit.log_log.r_squared, 0.99);
  // Against log I the same sums flatten out.
  EXPECT_LT(s.coarse_fit.log.slope, 0.5);
}

TEST(RecurrenceSeries, SharpDominatesCoarseOnPoissonGraphs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int dim = 2 + seed % 2;
    const double side = dim == 2 ? 30 : 12;
    const auto kind = seed % 3 == 0 ? GraphKind::VS : GraphKind::DT;
    const auto g = ppp_graph(seed, dim, side, kind);
    const auto stats = annulus_edge_stats(g, centre(dim, side), 1, static_cast<int>(side / 2));
    const auto s = recurrence_series(stats, 1.0);
    for (std::size_t k = 0; k < s.index.size(); ++k) ASSERT_GE(s.sharp[k], s.coarse[k]) << "seed " << seed;
  }
}

TEST(RecurrenceSeries, SharpSeriesEqualsReductionBound) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int dim = 2 + seed % 2;
    const double side = dim == 2 ? 24 : 12;
    const auto g = ppp_graph(seed, dim, side);
    const Point c = centre(dim, side);
    const int imax = static_cast<int>(side / 2);
    const double supC = 2.5;
    const auto stats = annulus_edge_stats(g, c, 1, imax);
    const auto s = recurrence_series(stats, supC);
    const auto b = annulus_reduction_bound(assign_conductances(g, ConductanceModel::constant(supC)), c, 1, imax);
    double partial = 0.0;
    for (std::size_t k = 0; k < b.r.size(); ++k) {
      if (std::isfinite(b.r[k])) partial += b.r[k];
      EXPECT_NEAR(s.sharp[k], partial, 1e-12 * partial);
    }
  }
}

TEST(RecurrenceSeries, EmptyAnnulusIsSkipped) {
  auto g = graph_from_edges(2, {{0.5, 0, 0}, {1.5, 0, 0}, {5.5, 0, 0}, {6.5, 0, 0}}, {{0, 1}, {2, 3}});
  const auto s = recurrence_series(annulus_edge_stats(g, {0, 0, 0}, 1, 4), 1.0);
  EXPECT_EQ(s.skipped, (std::vector<int>{2, 3, 4}));
  EXPECT_DOUBLE_EQ(s.sharp.back(), 1.0);
  EXPECT_THROW(recurrence_series(annulus_edge_stats(g, {0, 0, 0}, 1, 4), 0.0), ParameterError);
}

TEST(Envelopes, SmallIndicesAreSkipped) {
  const auto pts = sample_ppp(Window::cube(2, 0, 40, 6), 1.0, 3);
  const auto rep = envelope_events(pts, GraphKind::DT, {1, 2, 3, 10}, 1.0, 2.0);
  EXPECT_TRUE(rep.rows[0].skipped);
  EXPECT_TRUE(rep.rows[1].skipped);
  EXPECT_FALSE(rep.rows[2].skipped);
  EXPECT_FALSE(rep.rows[3].skipped);
  EXPECT_THROW(envelope_events(pts, GraphKind::GAB, {5}, 1.0, 2.0), UsageError);
}

TEST(Envelopes, EmptyDiskOnTheBoundaryTriggersLongEdge) {
  const double c1 = 4.0;
  const int i = 30;
  const double w = envelope_thresholds(GraphKind::DT, i, c1, 2.0).first;
  auto pts = sample_ppp(Window::cube(2, 0, 100, 20), 1.0, 8);
  const Point hole{50.0 + i, 50.0, 0.0};
  std::vector<Point> kept;
  for (const auto& p : pts.points)
    if (distance(p, hole, 2) >= 1.5 * w) kept.push_back(p);
  pts.points = kept;
  const auto rep = envelope_events(pts, GraphKind::DT, {i}, c1, 2.0);
  EXPECT_TRUE(rep.rows[0].long_edge);
  EXPECT_GT(rep.rows[0].max_length, w);
  // Without the hole the same sample has no long crossing edge at i.
  const auto plain = envelope_events(sample_ppp(Window::cube(2, 0, 100, 20), 1.0, 8), GraphKind::DT, {i}, c1, 2.0);
  EXPECT_FALSE(plain.rows[0].long_edge);
}

TEST(Envelopes, EulerCountHoldsOnPoissonSamples) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = sample_ppp(Window::cube(2, 0, 80, 10), 1.0, seed);
    const auto rep = envelope_events(pts, GraphKind::DT, {3, 5, 8, 12, 16, 20}, 1.0, 2.0);
    for (const auto& row : rep.rows) {
      EXPECT_TRUE(row.euler_ok) << "seed " << seed << " i " << row.i;
      EXPECT_GT(row.crossing, 0u);
    }
  }
}

TEST(Envelopes, InverseSquareCheck) {
  const std::vector<int> idx{3, 4, 5, 6};
  std::vector<double> f;
  for (int i : idx) f.push_back(0.5 / (i * i));
  const auto c = inverse_square_check(idx, f);
  EXPECT_NEAR(c.fitted, 0.5, 1e-12);
  EXPECT_NEAR(c.max_scaled, 0.5, 1e-12);
  EXPECT_TRUE(c.bounded);
  const auto zero = inverse_square_check(idx, {0, 0, 0, 0});
  EXPECT_TRUE(zero.bounded);
  const auto spike = inverse_square_check(idx, {0, 0, 0, 1});
  EXPECT_FALSE(spike.bounded);
}
