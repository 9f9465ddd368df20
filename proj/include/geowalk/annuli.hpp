#pragma once

#include <cmath>
#include <vector>

#include "geowalk/error.hpp"
#include "geowalk/graph.hpp"
#include "geowalk/point.hpp"

namespace geowalk {

/// Annulus index of x about `center`: a(x) = floor(|x - center|_inf) + 1, so
/// x lies in A_{a(x)} = {a - 1 <= |x|_inf < a} and in B_i = {|x|_inf < i}
/// exactly when a(x) <= i.
inline int annulus_index(const Point& x, const Point& center, int dim) {
  return static_cast<int>(std::floor(sup_distance(x, center, dim))) + 1;
}

inline std::vector<int> annulus_indices(const GeometricGraph& g, const Point& center) {
  std::vector<int> a(g.vertices.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = annulus_index(g.vertices[i], center, g.dimension);
  return a;
}

/// Rejects annulus ranges whose outer box B_imax leaves the analysis region
/// of a trimmed graph. Untrimmed (hand-built) graphs are not checked.
inline void check_annulus_range(const GeometricGraph& g, const Point& center, int i0, int imax) {
  if (i0 < 1 || imax < i0) throw RangeError("annulus range must satisfy 1 <= i0 <= imax");
  if (!g.trimmed) return;
  for (int k = 0; k < g.dimension; ++k)
    if (center[k] - imax < g.window.lower[k] || center[k] + imax > g.window.upper(k))
      throw RangeError("annulus B_imax exceeds the trimmed region");
}

/// Vertices in B_{i0} and vertices outside B_{imax}.
struct AnnulusTerminals {
  std::vector<int> inner;
  std::vector<int> outer;
};

inline AnnulusTerminals annulus_terminals(const GeometricGraph& g, const Point& center, int i0, int imax) {
  AnnulusTerminals t;
  const auto a = annulus_indices(g, center);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] <= i0) t.inner.push_back(static_cast<int>(i));
    if (a[i] > imax) t.outer.push_back(static_cast<int>(i));
  }
  return t;
}

/// Vertex of g nearest to `x` (smallest index on ties).
inline int nearest_vertex(const GeometricGraph& g, const Point& x) {
  if (g.vertices.empty()) throw UsageError("nearest_vertex: empty graph");
  int best = 0;
  double bd = squared_distance(g.vertices[0], x, g.dimension);
  for (std::size_t i = 1; i < g.vertices.size(); ++i) {
    const double d = squared_distance(g.vertices[i], x, g.dimension);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace geowalk
