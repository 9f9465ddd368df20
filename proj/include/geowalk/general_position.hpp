#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <span>
#include <vector>

#include "geowalk/delaunay.hpp"
#include "geowalk/error.hpp"
#include "geowalk/point.hpp"
#include "geowalk/point_process.hpp"
#include "geowalk/predicates.hpp"

namespace geowalk {

enum class DegeneracyKind { affine, spherical };

struct DegenerateTuple {
  DegeneracyKind kind = DegeneracyKind::affine;
  /// Sorted point indices: d+1 for affine, d+2 for spherical tuples.
  std::vector<int> indices;
  /// Exactly degenerate under rational evaluation, not just within tolerance.
  bool exact = false;
  /// |det| / permanent of the defining determinant.
  double magnitude = 0.0;
};

struct GeneralPositionReport {
  std::vector<DegenerateTuple> tuples;
  std::size_t exact_count = 0;
  std::size_t near_count = 0;
  std::size_t candidates_checked = 0;
  double tolerance = 0.0;
  bool pass() const { return tuples.empty(); }
};

namespace detail {

template <int D>
class GeneralPositionScan {
 public:
  GeneralPositionScan(std::span<const Point> pts, double eps) : pts_(pts) { report_.tolerance = eps; }

  void affine(std::vector<int> idx) {
    std::sort(idx.begin(), idx.end());
    if (!seen_affine_.insert(idx).second) return;
    std::array<const Point*, D + 1> q{};
    for (int k = 0; k <= D; ++k) q[k] = &pts_[idx[k]];
    record(DegeneracyKind::affine, std::move(idx), predicates::orient<D>(q) == 0, predicates::orient_magnitude<D>(q));
  }

  void spherical(std::vector<int> idx) {
    std::sort(idx.begin(), idx.end());
    if (!seen_spherical_.insert(idx).second) return;
    std::array<const Point*, D + 2> q{};
    for (int k = 0; k < D + 2; ++k) q[k] = &pts_[idx[k]];
    // A tuple on a common hyperplane has a vanishing lifted determinant too;
    // only report it as spherical when every d+1 subset is independent.
    for (int skip = 0; skip < D + 2; ++skip) {
      std::array<const Point*, D + 1> r{};
      int c = 0;
      for (int k = 0; k < D + 2; ++k)
        if (k != skip) r[c++] = q[k];
      if (predicates::orient<D>(r) == 0) return;
    }
    record(DegeneracyKind::spherical, std::move(idx), predicates::lifted<D>(q) == 0, predicates::lifted_magnitude<D>(q));
  }

  GeneralPositionReport finish() {
    std::sort(report_.tuples.begin(), report_.tuples.end(), [](const DegenerateTuple& a, const DegenerateTuple& b) {
      return std::tie(a.kind, a.indices) < std::tie(b.kind, b.indices);
    });
    return std::move(report_);
  }

 private:
  void record(DegeneracyKind kind, std::vector<int> idx, bool exact, double magnitude) {
    ++report_.candidates_checked;
    if (!exact && !(magnitude < report_.tolerance)) return;
    (exact ? report_.exact_count : report_.near_count) += 1;
    report_.tuples.push_back({kind, std::move(idx), exact, magnitude});
  }

  std::span<const Point> pts_;
  GeneralPositionReport report_;
  std::set<std::vector<int>> seen_affine_, seen_spherical_;
};

// Calls fn on every k-subset of {0..n-1}, as a vector of positions.
template <class Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  if (k > n) return;
  std::vector<int> c(k);
  for (int i = 0; i < k; ++i) c[i] = i;
  for (;;) {
    fn(c);
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) return;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
}

template <int D>
GeneralPositionReport check_general_position_impl(std::span<const Point> pts, double eps) {
  GeneralPositionScan<D> scan(pts, eps);
  const int n = static_cast<int>(pts.size());
  if (n <= 12) {
    for_each_subset(n, D + 1, [&](const std::vector<int>& c) { scan.affine(c); });
    for_each_subset(n, D + 2, [&](const std::vector<int>& c) { scan.spherical(c); });
    return scan.finish();
  }
  Triangulation t;
  try {
    t = delaunay(pts, D, bounding_window(pts, D));
  } catch (const ConstructionError&) {
    // Fully degenerate (or duplicated) input: fall back to reporting the
    // first d+1 points, which span nothing.
    std::vector<int> first(D + 1);
    for (int k = 0; k <= D; ++k) first[k] = k;
    scan.affine(first);
    return scan.finish();
  }
  // Spherical candidates: the d+2 vertices of facet-adjacent simplices.
  const int m = D + 1;
  for (std::size_t s = 0; s < t.size(); ++s)
    for (int k = 0; k < m; ++k) {
      const int nb = t.neighbors[s][k];
      if (nb < 0 || nb < static_cast<int>(s)) continue;
      std::vector<int> idx(t.simplices[s].begin(), t.simplices[s].begin() + m);
      for (int j = 0; j < m; ++j)
        if (std::find(idx.begin(), idx.end(), t.simplices[nb][j]) == idx.end()) idx.push_back(t.simplices[nb][j]);
      scan.spherical(idx);
    }
  // Affine candidates: a vertex together with d of its Delaunay neighbours.
  std::vector<std::vector<int>> nbrs(pts.size());
  for (auto [u, v] : delaunay_edges(t)) {
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }
  for (int v = 0; v < n; ++v) {
    const auto& nb = nbrs[v];
    for_each_subset(static_cast<int>(nb.size()), D, [&](const std::vector<int>& c) {
      std::vector<int> idx{v};
      for (int j : c) idx.push_back(nb[j]);
      scan.affine(idx);
    });
  }
  return scan.finish();
}

}  // namespace detail

/// Scans for affinely degenerate (d+1)-tuples and cospherical (d+2)-tuples.
/// Up to 12 points every tuple is checked; beyond that candidates come from
/// the Delaunay construction. Tuples are reported when exactly degenerate or
/// when their normalised determinant is below `eps`.
inline GeneralPositionReport check_general_position(std::span<const Point> pts, int dim, double eps = 1e-10) {
  if (dim == 2) return detail::check_general_position_impl<2>(pts, eps);
  if (dim == 3) return detail::check_general_position_impl<3>(pts, eps);
  throw ParameterError("check_general_position: dimension must be 2 or 3");
}

inline GeneralPositionReport check_general_position(const PointSet& s, double eps = 1e-10) {
  return check_general_position(s.points, s.dimension(), eps);
}

}  // namespace geowalk
