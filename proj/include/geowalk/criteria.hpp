#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "geowalk/annuli.hpp"
#include "geowalk/delaunay.hpp"
#include "geowalk/error.hpp"
#include "geowalk/graph.hpp"
#include "geowalk/point_process.hpp"
#include "geowalk/stats.hpp"

namespace geowalk {

// ---------------------------------------------------------------------------
// Annulus crossing statistics.

struct AnnulusRow {
  int i = 0;
  /// Edges of Ed_G(i): one endpoint in B_i, the other outside.
  std::vector<int> edges;
  /// span_counts[j - 1] = #Ed_G(i, j).
  std::vector<std::size_t> span_counts;
  /// L(i): longest edge of Ed_G(i) (0 when empty).
  double max_length = 0.0;
  /// N(i) = #Ed_G(i).
  std::size_t count = 0;

  /// Sum over j of j #Ed_G(i, j).
  std::size_t weighted_span() const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < span_counts.size(); ++j) s += (j + 1) * span_counts[j];
    return s;
  }
};

struct AnnulusStats {
  Point center{0.0, 0.0, 0.0};
  int i0 = 1;
  int imax = 1;
  std::vector<AnnulusRow> rows;
};

/// Classifies every edge by the annulus indices a1 < a2 of its endpoints; the
/// edge lies in Ed_G(i, a2 - a1) for each i in [a1, a2 - 1].
inline AnnulusStats annulus_edge_stats(const GeometricGraph& g, const Point& center, int i0, int imax) {
  check_annulus_range(g, center, i0, imax);
  AnnulusStats out;
  out.center = center;
  out.i0 = i0;
  out.imax = imax;
  out.rows.resize(imax - i0 + 1);
  for (int i = i0; i <= imax; ++i) out.rows[i - i0].i = i;
  const auto a = annulus_indices(g, center);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    int a1 = a[g.edges[e].u], a2 = a[g.edges[e].v];
    if (a1 == a2) continue;
    if (a1 > a2) std::swap(a1, a2);
    const int j = a2 - a1;
    for (int i = std::max(a1, i0); i <= std::min(a2 - 1, imax); ++i) {
      auto& row = out.rows[i - i0];
      row.edges.push_back(static_cast<int>(e));
      if (row.span_counts.size() < static_cast<std::size_t>(j)) row.span_counts.resize(j, 0);
      ++row.span_counts[j - 1];
      row.max_length = std::max(row.max_length, g.edges[e].length);
      ++row.count;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recurrence series.

struct SeriesFit {
  LinearFit log_log;
  LinearFit log;
};

struct RecurrenceSeries {
  double sup_conductance = 1.0;
  std::vector<int> index;
  /// Partial sums of 1 / (supC L(i) N(i)).
  std::vector<double> coarse;
  /// Partial sums of r_i with 1 / r_i = supC sum_j j #Ed_G(i, j).
  std::vector<double> sharp;
  /// Indices with N(i) = 0, left out of both sums.
  std::vector<int> skipped;
  /// Fits of the partial sums against log log I and log I (over I >= 3).
  SeriesFit coarse_fit;
  SeriesFit sharp_fit;
};

namespace detail {

inline SeriesFit fit_series(const std::vector<int>& index, const std::vector<double>& s) {
  std::vector<double> ll, l, y;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 3 || !std::isfinite(s[k])) continue;
    const double li = std::log(static_cast<double>(index[k]));
    ll.push_back(std::log(li));
    l.push_back(li);
    y.push_back(s[k]);
  }
  return {linear_fit(ll, y), linear_fit(l, y)};
}

}  // namespace detail

/// Series from per-index length bounds L(i), edge counts N(i) and weighted
/// spans sum_j j #Ed(i, j). Terms with N(i) = 0 are skipped and flagged.
inline RecurrenceSeries recurrence_series(const std::vector<int>& index, const std::vector<double>& L,
                                          const std::vector<double>& N, const std::vector<double>& weighted_span,
                                          double sup_conductance) {
  if (!(sup_conductance > 0.0) || !std::isfinite(sup_conductance))
    throw ParameterError("recurrence series: supC must be positive and finite");
  if (L.size() != index.size() || N.size() != index.size() || weighted_span.size() != index.size())
    throw UsageError("recurrence series: input lengths differ");
  RecurrenceSeries out;
  out.sup_conductance = sup_conductance;
  double c = 0.0, s = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (!(N[k] > 0.0)) {
      out.skipped.push_back(index[k]);
    } else {
      c += 1.0 / (sup_conductance * L[k] * N[k]);
      s += 1.0 / (sup_conductance * weighted_span[k]);
    }
    out.index.push_back(index[k]);
    out.coarse.push_back(c);
    out.sharp.push_back(s);
  }
  out.coarse_fit = detail::fit_series(out.index, out.coarse);
  out.sharp_fit = detail::fit_series(out.index, out.sharp);
  return out;
}

/// Series over the rows of `stats`. The coarse term uses ceil(L(i)) as the
/// span bound: an edge of length l crosses at most ceil(l) cuts, so the
/// coarse sum never exceeds the sharp one.
inline RecurrenceSeries recurrence_series(const AnnulusStats& stats, double sup_conductance) {
  std::vector<int> index;
  std::vector<double> L, N, W;
  for (const auto& row : stats.rows) {
    index.push_back(row.i);
    L.push_back(std::max(1.0, std::ceil(row.max_length)));
    N.push_back(static_cast<double>(row.count));
    W.push_back(static_cast<double>(row.weighted_span()));
  }
  return recurrence_series(index, L, N, W, sup_conductance);
}

// ---------------------------------------------------------------------------
// Planar envelope events.

struct EnvelopeRow {
  int i = 0;
  /// log i <= 1: no envelope is defined.
  bool skipped = false;
  double length_threshold = 0.0;
  double count_threshold = 0.0;
  double max_length = 0.0;
  std::size_t crossing = 0;
  /// Some crossing edge is longer than the length envelope.
  bool long_edge = false;
  /// The crossing count reaches the count envelope.
  bool many_edges = false;
  /// Points of the sample in the collar R(i) (Delaunay only).
  std::size_t collar_points = 0;
  /// crossing <= 3 #(N in R(i)) - 6, checked when no edge is long.
  bool euler_ok = true;
};

struct EnvelopeReport {
  GraphKind kind = GraphKind::DT;
  Point center{0.0, 0.0, 0.0};
  double c1 = 0.0;
  double c2 = 0.0;
  std::vector<EnvelopeRow> rows;
};

/// Length and count envelopes: 8 c1^{-1/2} sqrt(log i) and
/// 384 c1^{-1/2} c2 i sqrt(log i) for DT, 4 sqrt2 c1^{-1/2} sqrt(log i) and
/// 64 sqrt2 c1^{-1/2} c2 i sqrt(log i) for VS.
inline std::pair<double, double> envelope_thresholds(GraphKind kind, int i, double c1, double c2) {
  const double s = std::sqrt(std::log(static_cast<double>(i))) / std::sqrt(c1);
  if (kind == GraphKind::DT) return {8.0 * s, 384.0 * c2 * i * s};
  if (kind == GraphKind::VS) return {4.0 * std::numbers::sqrt2 * s, 64.0 * std::numbers::sqrt2 * c2 * i * s};
  throw UsageError("envelope events are defined for DT and VS graphs");
}

/// Events for each i of the grid on a trimmed planar DT or VS graph of
/// `points`. The collar R(i) is B_{i+w} minus the interior of B_{i-w} with
/// w the DT length envelope; the Euler count is checked on DT graphs.
inline EnvelopeReport envelope_events(const PointSet& points, const GeometricGraph& g, const Point& center,
                                      const std::vector<int>& is, double c1, double c2) {
  if (g.dimension != 2) throw UsageError("envelope events need d = 2");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ParameterError("envelope events: c1 and c2 must be positive");
  EnvelopeReport out;
  out.kind = g.kind;
  out.center = center;
  out.c1 = c1;
  out.c2 = c2;
  if (g.kind == GraphKind::GAB) throw UsageError("envelope events are defined for DT and VS graphs");
  const auto a = annulus_indices(g, center);
  for (int i : is) {
    EnvelopeRow row;
    row.i = i;
    if (i < 1 || std::log(static_cast<double>(i)) <= 1.0) {
      row.skipped = true;
      out.rows.push_back(row);
      continue;
    }
    check_annulus_range(g, center, 1, i);
    const auto [len, cnt] = envelope_thresholds(g.kind, i, c1, c2);
    row.length_threshold = len;
    row.count_threshold = cnt;
    for (const auto& e : g.edges) {
      const int a1 = std::min(a[e.u], a[e.v]), a2 = std::max(a[e.u], a[e.v]);
      if (!(a1 <= i && i < a2)) continue;
      ++row.crossing;
      row.max_length = std::max(row.max_length, e.length);
    }
    row.long_edge = row.max_length > len;
    row.many_edges = static_cast<double>(row.crossing) >= cnt;
    if (g.kind == GraphKind::DT) {
      const double w = envelope_thresholds(GraphKind::DT, i, c1, c2).first;
      for (const auto& p : points.points) {
        const double r = sup_distance(p, center, 2);
        if (r <= i + w && r >= i - w) ++row.collar_points;
      }
      const double n = static_cast<double>(row.collar_points);
      const double bound = n >= 3 ? 3.0 * n - 6.0 : std::max(0.0, n - 1.0);
      row.euler_ok = row.long_edge || static_cast<double>(row.crossing) <= bound;
    }
    out.rows.push_back(row);
  }
  return out;
}

/// Builds the Delaunay triangulation of `points`, the requested graph and
/// its trim to the window, then evaluates the events about the window centre.
inline EnvelopeReport envelope_events(const PointSet& points, GraphKind kind, const std::vector<int>& is, double c1,
                                      double c2) {
  const auto t = delaunay(points.points, points.dimension(), points.window);
  const auto g = trim_to_analysis_region(build_graph(kind, points.points, t), points.window);
  Point c{0.0, 0.0, 0.0};
  for (int k = 0; k < 2; ++k) c[k] = points.window.lower[k] + 0.5 * points.window.sides[k];
  return envelope_events(points, g, c, is, c1, c2);
}

struct EnvelopeFrequencies {
  std::vector<int> index;
  std::vector<double> long_edge;
  std::vector<double> many_edges;
  std::size_t replicas = 0;
  std::size_t euler_violations = 0;
};

inline EnvelopeFrequencies envelope_frequencies(const std::vector<EnvelopeReport>& reports) {
  EnvelopeFrequencies f;
  f.replicas = reports.size();
  if (reports.empty()) return f;
  for (const auto& row : reports.front().rows)
    if (!row.skipped) f.index.push_back(row.i);
  f.long_edge.assign(f.index.size(), 0.0);
  f.many_edges.assign(f.index.size(), 0.0);
  for (const auto& rep : reports) {
    std::size_t k = 0;
    for (const auto& row : rep.rows) {
      if (row.skipped) continue;
      f.long_edge[k] += row.long_edge;
      f.many_edges[k] += row.many_edges;
      f.euler_violations += !row.euler_ok;
      ++k;
    }
  }
  for (auto& x : f.long_edge) x /= static_cast<double>(reports.size());
  for (auto& x : f.many_edges) x /= static_cast<double>(reports.size());
  return f;
}

struct InverseSquareCheck {
  /// Least-squares constant in f(i) ~ c / i^2.
  double fitted = 0.0;
  /// max over the grid of f(i) i^2.
  double max_scaled = 0.0;
  /// max_scaled <= 10 * fitted.
  bool bounded = true;
};

inline InverseSquareCheck inverse_square_check(const std::vector<int>& index, const std::vector<double>& freq) {
  InverseSquareCheck c;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    const double i2 = static_cast<double>(index[k]) * index[k];
    num += freq[k] / i2;
    den += 1.0 / (i2 * i2);
    c.max_scaled = std::max(c.max_scaled, freq[k] * i2);
  }
  c.fitted = den > 0.0 ? num / den : 0.0;
  c.bounded = c.max_scaled <= 10.0 * c.fitted;
  return c;
}

}  // namespace geowalk
