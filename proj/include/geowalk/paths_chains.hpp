#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <limits>
#include <span>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "geowalk/error.hpp"
#include "geowalk/graph.hpp"
#include "geowalk/point.hpp"
#include "geowalk/predicates.hpp"
#include "geowalk/spatial_grid.hpp"

namespace geowalk {

/// Path x_1 .. x_n of sample points joined by Gabriel edges.
struct GabrielPath {
  /// Indices into the point list.
  std::vector<int> vertices;
  std::vector<double> squared_hops;
  /// |x_n - x_1|^2.
  double budget = 0.0;
  double squared_sum = 0.0;
  /// Sum of squared hops <= budget, evaluated in rational arithmetic.
  bool certified = false;
  /// Vertices dropped when cycles of the recursive construction were cut.
  std::size_t excised = 0;

  std::size_t hops() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

namespace detail {

inline std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

inline bool lex_less(const Point& a, const Point& b, int dim) {
  for (int k = 0; k < dim; ++k) {
    if (a[k] < b[k]) return true;
    if (a[k] > b[k]) return false;
  }
  return false;
}

}  // namespace detail

/// Exact check of sum |x_{j+1} - x_j|^2 <= |x_n - x_1|^2.
inline bool squared_budget_holds(std::span<const Point> points, const std::vector<int>& path, int dim) {
  if (path.size() < 2) return true;
  mpq_class sum = 0, budget = 0;
  for (std::size_t j = 0; j + 1 < path.size(); ++j)
    for (int k = 0; k < dim; ++k) {
      const mpq_class d = mpq_class(points[path[j + 1]][k]) - mpq_class(points[path[j]][k]);
      sum += d * d;
    }
  for (int k = 0; k < dim; ++k) {
    const mpq_class d = mpq_class(points[path.back()][k]) - mpq_class(points[path.front()][k]);
    budget += d * d;
  }
  return sum <= budget;
}

/// Short Gabriel paths between sample points by diametral-ball recursion:
/// (x, y) is returned when it is a Gabriel edge, otherwise the
/// lexicographically smallest sample point z in the open ball with diameter
/// [x, y] splits the problem into (x, z) and (z, y).
class GabrielPathFinder {
 public:
  /// `gab` must be a Gabriel graph whose `origin` indexes `points`.
  GabrielPathFinder(std::span<const Point> points, const GeometricGraph& gab)
      : points_(points), dim_(gab.dimension), grid_(points, gab.dimension) {
    if (gab.kind != GraphKind::GAB) throw UsageError("short path: graph is not a Gabriel graph");
    for (const auto& e : gab.edges) edges_.insert(detail::pair_key(static_cast<int>(gab.origin[e.u]), static_cast<int>(gab.origin[e.v])));
  }

  std::size_t max_steps = 10'000'000;

  /// Lexicographically smallest point strictly inside the ball with
  /// diameter [x, y], or -1.
  int split_point(int x, int y) const {
    const Point& a = points_[x];
    const Point& b = points_[y];
    Point c{0.0, 0.0, 0.0};
    for (int k = 0; k < dim_; ++k) c[k] = 0.5 * (a[k] + b[k]);
    const double r = 0.5 * distance(a, b, dim_) * (1.0 + 1e-9) + 1e-300;
    int best = -1;
    grid_.for_each_in_ball(c, r, [&](std::size_t w) {
      const int wi = static_cast<int>(w);
      if (wi == x || wi == y) return;
      if (predicates::diametral(a, b, points_[wi], dim_) >= 0) return;
      if (best < 0 || detail::lex_less(points_[wi], points_[best], dim_) ||
          (points_[wi] == points_[best] && wi < best))
        best = wi;
    });
    return best;
  }

  bool is_edge(int x, int y) const { return edges_.count(detail::pair_key(x, y)) > 0; }

  GabrielPath path(int x, int y) const {
    const int n = static_cast<int>(points_.size());
    if (x < 0 || y < 0 || x >= n || y >= n) throw UsageError("short path: endpoint is not a sample point");
    GabrielPath out;
    std::vector<int> seq{x};
    if (x != y) {
      std::vector<std::pair<int, int>> stack{{x, y}};
      std::size_t steps = 0;
      while (!stack.empty()) {
        if (++steps > max_steps) throw ConstructionError("short path: step budget exceeded");
        const auto [a, b] = stack.back();
        stack.pop_back();
        const int z = split_point(a, b);
        if (z < 0) {
          if (!is_edge(a, b)) throw UsageError("short path: empty diametral ball but no edge in the Gabriel graph");
          seq.push_back(b);
          continue;
        }
        stack.push_back({z, b});
        stack.push_back({a, z});
      }
    }
    // Cut cycles: on revisiting a vertex, drop everything since its first visit.
    std::unordered_map<int, std::size_t> pos;
    for (int v : seq) {
      auto it = pos.find(v);
      if (it != pos.end()) {
        for (std::size_t k = it->second + 1; k < out.vertices.size(); ++k) pos.erase(out.vertices[k]);
        out.excised += out.vertices.size() - (it->second + 1);
        out.vertices.resize(it->second + 1);
        continue;
      }
      pos[v] = out.vertices.size();
      out.vertices.push_back(v);
    }
    for (std::size_t j = 0; j + 1 < out.vertices.size(); ++j) {
      const double s = squared_distance(points_[out.vertices[j]], points_[out.vertices[j + 1]], dim_);
      out.squared_hops.push_back(s);
      out.squared_sum += s;
    }
    out.budget = squared_distance(points_[x], points_[y], dim_);
    out.certified = squared_budget_holds(points_, out.vertices, dim_);
    return out;
  }

  std::span<const Point> points() const { return points_; }
  int dimension() const { return dim_; }

 private:
  std::span<const Point> points_;
  int dim_;
  SpatialGrid grid_;
  std::unordered_set<std::uint64_t> edges_;
};

inline GabrielPath gabriel_short_path(std::span<const Point> points, const GeometricGraph& gab, int x, int y) {
  return GabrielPathFinder(points, gab).path(x, y);
}

/// Index of the sample point equal to p; UsageError when p is not a sample point.
inline int point_index(std::span<const Point> points, const Point& p) {
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i] == p) return static_cast<int>(i);
  throw UsageError("point is not in the sample");
}

// ---------------------------------------------------------------------------
// Descending chains.

struct ChainSearch {
  /// Longest chain found (point indices); consecutive gaps strictly decrease.
  std::vector<int> chain;
  std::size_t extensions = 0;
  /// The work budget ran out before the search space was exhausted.
  bool exhausted = false;
  /// chain.size() >= requested minimum length.
  bool found = false;
  /// Longest chain when points may repeat: an upper bound on chain.size().
  std::size_t upper_bound = 0;
};

/// Whether consecutive gaps of `chain` strictly decrease, evaluated exactly.
inline bool strictly_descending(std::span<const Point> points, const std::vector<int>& chain, int dim) {
  for (std::size_t k = 0; k + 2 < chain.size(); ++k)
    if (predicates::compare_squared_lengths(points[chain[k + 1]], points[chain[k + 2]], points[chain[k]],
                                            points[chain[k + 1]], dim) >= 0)
      return false;
  return true;
}

/// Longest chain of distinct points with strictly decreasing gaps.
///
/// A dynamic program over directed pairs, taken in increasing length, gives
/// for each point q and gap g the longest continuation from q with first gap
/// below g when repeats are allowed. A depth-first search over distinct
/// points uses it to prune; every candidate tested is one extension and the
/// search stops after `budget` extensions.
inline ChainSearch find_descending_chain(std::span<const Point> points, int dim, std::size_t min_length,
                                         std::size_t budget = 1'000'000) {
  if (min_length < 2) throw ParameterError("descending chain: minimum length must be >= 2");
  ChainSearch out;
  const int n = static_cast<int>(points.size());
  if (n < 2) {
    if (n == 1) out.chain = {0};
    out.upper_bound = static_cast<std::size_t>(n);
    out.found = out.chain.size() >= min_length;
    return out;
  }
  struct Arc {
    double length;
    int from, to;
  };
  std::vector<Arc> arcs;
  arcs.reserve(static_cast<std::size_t>(n) * (n - 1));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      if (p != q) arcs.push_back({squared_distance(points[p], points[q], dim), p, q});
  auto shorter = [&](const Arc& a, const Arc& b) {
    const int c = predicates::compare_squared_lengths(points[a.from], points[a.to], points[b.from], points[b.to], dim);
    if (c != 0) return c < 0;
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  };
  std::sort(arcs.begin(), arcs.end(), shorter);
  // out_arcs[q]: arcs leaving q in increasing length with the running
  // maximum of the continuation length (in edges).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out_arcs(n);
  std::vector<std::size_t> best_from(n, 0);
  std::size_t g = 0;
  while (g < arcs.size()) {
    std::size_t h = g + 1;
    while (h < arcs.size() && predicates::compare_squared_lengths(points[arcs[g].from], points[arcs[g].to],
                                                                  points[arcs[h].from], points[arcs[h].to], dim) == 0)
      ++h;
    std::vector<std::size_t> value(h - g);
    for (std::size_t k = g; k < h; ++k) value[k - g] = 1 + best_from[arcs[k].to];
    for (std::size_t k = g; k < h; ++k) {
      const int p = arcs[k].from;
      best_from[p] = std::max(best_from[p], value[k - g]);
      out_arcs[p].push_back({k, best_from[p]});
    }
    g = h;
  }
  std::size_t ub = 0;
  for (int p = 0; p < n; ++p) ub = std::max(ub, best_from[p] + 1);
  out.upper_bound = ub;
  // Longest continuation from q with first arc strictly shorter than arc `limit`.
  auto bound_from = [&](int q, std::size_t limit) -> std::size_t {
    const auto& v = out_arcs[q];
    auto it = std::lower_bound(v.begin(), v.end(), limit, [&](const std::pair<std::size_t, std::size_t>& a, std::size_t l) {
      return predicates::compare_squared_lengths(points[arcs[a.first].from], points[arcs[a.first].to],
                                                 points[arcs[l].from], points[arcs[l].to], dim) < 0;
    });
    return it == v.begin() ? 0 : std::prev(it)->second;
  };

  std::vector<int> chain;
  std::vector<char> used(n, 0);
  std::vector<int> best;
  bool stop = false;
  auto dfs = [&](auto&& self, std::size_t last_arc) -> void {
    if (chain.size() > best.size()) best = chain;
    if (best.size() >= ub) {
      stop = true;
      return;
    }
    const int q = chain.back();
    const auto& v = out_arcs[q];
    for (auto it = v.rbegin(); it != v.rend() && !stop; ++it) {
      const Arc& a = arcs[it->first];
      if (predicates::compare_squared_lengths(points[a.from], points[a.to], points[arcs[last_arc].from],
                                              points[arcs[last_arc].to], dim) >= 0)
        continue;
      if (++out.extensions > budget) {
        out.exhausted = true;
        stop = true;
        return;
      }
      if (used[a.to]) continue;
      if (chain.size() + 1 + bound_from(a.to, it->first) <= best.size()) continue;
      used[a.to] = 1;
      chain.push_back(a.to);
      self(self, it->first);
      chain.pop_back();
      used[a.to] = 0;
    }
  };
  // Start from every arc, longest first; the first gap is unconstrained.
  for (auto it = arcs.rbegin(); it != arcs.rend() && !stop; ++it) {
    if (2 + bound_from(it->to, static_cast<std::size_t>(arcs.rend() - it - 1)) <= best.size()) continue;
    if (++out.extensions > budget) {
      out.exhausted = true;
      break;
    }
    chain = {it->from, it->to};
    used[it->from] = used[it->to] = 1;
    dfs(dfs, static_cast<std::size_t>(arcs.rend() - it - 1));
    used[it->from] = used[it->to] = 0;
  }
  out.chain = best;
  out.found = out.chain.size() >= min_length;
  return out;
}

}  // namespace geowalk
