#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "geowalk/error.hpp"
#include "geowalk/point.hpp"
#include "geowalk/predicates.hpp"

namespace geowalk {

/// Delaunay triangulation of a finite point set in d = 2 or 3.
///
/// Simplex s has vertices simplices[s][0..d] (positively oriented) and
/// neighbors[s][k] is the simplex sharing the facet opposite vertex k, or -1
/// on the convex hull. Unused trailing slots are -1.
struct Triangulation {
  int dimension = 2;
  std::vector<Point> vertices;
  std::vector<std::array<int, 4>> simplices;
  std::vector<std::array<int, 4>> neighbors;
  std::vector<Point> circumcenters;
  std::vector<double> circumradii;
  /// Sampling window of the source points; trust flags refer to it.
  Window window;
  /// Circumball contained in the sampled region (window plus buffer).
  std::vector<char> trusted;
  /// Fingerprint of the vertex coordinates, used to match graphs to inputs.
  std::uint64_t fingerprint = 0;

  std::size_t size() const { return simplices.size(); }
  int simplex_size() const { return dimension + 1; }
};

inline std::uint64_t point_fingerprint(std::span<const Point> points, int dim) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ static_cast<std::uint64_t>(points.size());
  for (const auto& p : points) {
    for (int k = 0; k < dim; ++k) {
      std::uint64_t bits;
      std::memcpy(&bits, &p[k], sizeof bits);
      h = (h ^ bits) * 0x100000001b3ULL;
      h ^= h >> 29;
    }
  }
  return h;
}

/// Circumcenter of the simplex with vertices q[0..D]; returns false when the
/// simplex is numerically flat.
template <int D>
bool circumcenter(const std::array<const Point*, D + 1>& q, Point& center) {
  double a[D][D + 1];
  for (int r = 0; r < D; ++r) {
    double rhs = 0.0;
    for (int k = 0; k < D; ++k) {
      a[r][k] = (*q[r + 1])[k] - (*q[0])[k];
      rhs += a[r][k] * a[r][k];
    }
    a[r][D] = 0.5 * rhs;
  }
  for (int col = 0; col < D; ++col) {
    int pivot = col;
    for (int r = col + 1; r < D; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    if (a[pivot][col] == 0.0) return false;
    if (pivot != col)
      for (int k = 0; k <= D; ++k) std::swap(a[pivot][k], a[col][k]);
    for (int r = 0; r < D; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int k = col; k <= D; ++k) a[r][k] -= f * a[col][k];
    }
  }
  center = {0.0, 0.0, 0.0};
  for (int k = 0; k < D; ++k) {
    const double x = a[k][D] / a[k][k];
    if (!std::isfinite(x)) return false;
    center[k] = (*q[0])[k] + x;
  }
  return true;
}

/// Incremental Bowyer-Watson construction with an infinite vertex.
///
/// Cells containing the infinite vertex (index kInf) close the hull; such a
/// cell becomes positively oriented when the infinite vertex is replaced by
/// any point strictly beyond its hull facet.
template <int D>
class DelaunayBuilder {
 public:
  static_assert(D == 2 || D == 3);
  static constexpr int kInf = -1;

  explicit DelaunayBuilder(std::span<const Point> points) : pts_(points) {}

  Triangulation build(const Window& window) {
    const std::size_t n = pts_.size();
    if (n < static_cast<std::size_t>(D + 1))
      throw ConstructionError("delaunay: need at least " + std::to_string(D + 1) + " points");
    for (const auto& p : pts_)
      for (int k = 0; k < D; ++k)
        if (!std::isfinite(p[k])) throw ConstructionError("delaunay: non-finite coordinate");

    std::vector<int> order = spatial_order();
    place_initial_simplex(order);
    for (std::size_t t = D + 1; t < order.size(); ++t) insert(order[t]);
    return extract(window);
  }

 private:
  struct Cell {
    std::array<int, D + 1> v;
    std::array<int, D + 1> n;
  };

  bool is_ghost(const Cell& c) const {
    for (int k = 0; k <= D; ++k)
      if (c.v[k] == kInf) return true;
    return false;
  }

  int inf_slot(const Cell& c) const {
    for (int k = 0; k <= D; ++k)
      if (c.v[k] == kInf) return k;
    return -1;
  }

  std::vector<int> spatial_order() const {
    const std::size_t n = pts_.size();
    Point lo = pts_[0], hi = pts_[0];
    for (const auto& p : pts_)
      for (int k = 0; k < D; ++k) {
        lo[k] = std::min(lo[k], p[k]);
        hi[k] = std::max(hi[k], p[k]);
      }
    const int bits = D == 2 ? 31 : 21;
    const double cells = std::ldexp(1.0, bits) - 1.0;
    std::vector<std::pair<std::uint64_t, int>> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t code = 0;
      std::array<std::uint64_t, 3> q{0, 0, 0};
      for (int k = 0; k < D; ++k) {
        const double span = hi[k] - lo[k];
        const double t = span > 0.0 ? (pts_[i][k] - lo[k]) / span : 0.0;
        q[k] = static_cast<std::uint64_t>(std::clamp(t, 0.0, 1.0) * cells);
      }
      for (int b = bits - 1; b >= 0; --b)
        for (int k = D - 1; k >= 0; --k) code = (code << 1) | ((q[k] >> b) & 1u);
      keys[i] = {code, static_cast<int>(i)};
    }
    std::sort(keys.begin(), keys.end());
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = keys[i].second;
    return order;
  }

  bool collinear3(int a, int b, int c) const {
    using predicates::orient2;
    const Point& p = pts_[a];
    const Point& q = pts_[b];
    const Point& r = pts_[c];
    auto proj = [](const Point& x, int i, int j) { return Point{x[i], x[j], 0.0}; };
    return orient2(proj(p, 0, 1), proj(q, 0, 1), proj(r, 0, 1)) == 0 &&
           orient2(proj(p, 1, 2), proj(q, 1, 2), proj(r, 1, 2)) == 0 &&
           orient2(proj(p, 0, 2), proj(q, 0, 2), proj(r, 0, 2)) == 0;
  }

  bool same_point(int a, int b) const {
    for (int k = 0; k < D; ++k)
      if (pts_[a][k] != pts_[b][k]) return false;
    return true;
  }

  void place_initial_simplex(std::vector<int>& order) {
    std::vector<std::size_t> chosen{0};
    for (std::size_t t = 1; t < order.size() && chosen.size() < static_cast<std::size_t>(D + 1); ++t) {
      const int cand = order[t];
      const std::size_t r = chosen.size();
      bool independent = false;
      if (r == 1) {
        independent = !same_point(order[chosen[0]], cand);
      } else if (r == 2) {
        if constexpr (D == 2)
          independent = predicates::orient2(pts_[order[chosen[0]]], pts_[order[chosen[1]]], pts_[cand]) != 0;
        else
          independent = !collinear3(order[chosen[0]], order[chosen[1]], cand);
      } else if constexpr (D == 3) {
        independent = predicates::orient3(pts_[order[chosen[0]]], pts_[order[chosen[1]]], pts_[order[chosen[2]]],
                                          pts_[cand]) != 0;
      }
      if (independent) chosen.push_back(t);
    }
    if (chosen.size() < static_cast<std::size_t>(D + 1))
      throw ConstructionError("delaunay: all points are affinely degenerate");
    // Move the chosen points to the front, keeping the rest in spatial order.
    std::vector<int> front;
    std::vector<char> taken(order.size(), 0);
    for (auto t : chosen) {
      front.push_back(order[t]);
      taken[t] = 1;
    }
    std::vector<int> rest;
    rest.reserve(order.size());
    for (std::size_t t = 0; t < order.size(); ++t)
      if (!taken[t]) rest.push_back(order[t]);
    order = front;
    order.insert(order.end(), rest.begin(), rest.end());

    Cell c{};
    for (int k = 0; k <= D; ++k) c.v[k] = front[k];
    if (orient_cell(c.v) < 0) std::swap(c.v[0], c.v[1]);
    std::vector<int> ids{new_cell(c)};
    for (int i = 0; i <= D; ++i) {
      Cell g{};
      g.v = c.v;
      g.v[i] = kInf;
      const int a = (i + 1) % (D + 1);
      const int b = (i + 2) % (D + 1);
      std::swap(g.v[a], g.v[b]);
      ids.push_back(new_cell(g));
    }
    link(ids);
    last_ = ids[0];
  }

  int orient_cell(const std::array<int, D + 1>& v) const {
    std::array<const Point*, D + 1> q{};
    for (int k = 0; k <= D; ++k) q[k] = &pts_[v[k]];
    return predicates::orient<D>(q);
  }

  /// Orientation of cell c with slot `slot` replaced by point p.
  int orient_replaced(const Cell& c, int slot, int p) const {
    std::array<const Point*, D + 1> q{};
    for (int k = 0; k <= D; ++k) q[k] = &pts_[k == slot ? p : c.v[k]];
    return predicates::orient<D>(q);
  }

  bool finite_conflict(const Cell& c, int p) const {
    std::array<const Point*, D + 1> q{};
    std::array<long long, D + 1> ids{};
    for (int k = 0; k <= D; ++k) {
      q[k] = &pts_[c.v[k]];
      ids[k] = c.v[k];
    }
    return predicates::in_sphere<D>(q, ids, pts_[p], p);
  }

  bool conflict(int cell, int p) const {
    const Cell& c = cells_[cell];
    const int j = inf_slot(c);
    if (j < 0) return finite_conflict(c, p);
    const int o = orient_replaced(c, j, p);
    if (o != 0) return o > 0;
    return finite_conflict(cells_[c.n[j]], p);
  }

  int back_slot(int outer, int inner) const {
    for (int k = 0; k <= D; ++k)
      if (cells_[outer].n[k] == inner) return k;
    throw ConstructionError("delaunay: asymmetric adjacency");
  }

  int new_cell(const Cell& c) {
    if (!free_.empty()) {
      const int id = free_.back();
      free_.pop_back();
      cells_[id] = c;
      alive_[id] = 1;
      return id;
    }
    cells_.push_back(c);
    alive_.push_back(1);
    stamp_.push_back(0);
    return static_cast<int>(cells_.size()) - 1;
  }

  /// Links facets shared among the given cells. Facets already linked to a
  /// cell outside the set are marked by `skip` (slot index per cell, or -1).
  void link(const std::vector<int>& ids, const std::vector<int>* skip = nullptr) {
    struct Entry {
      std::array<int, D> key;
      int cell;
      int slot;
    };
    std::vector<Entry> entries;
    entries.reserve(ids.size() * D);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const Cell& c = cells_[ids[t]];
      for (int k = 0; k <= D; ++k) {
        if (skip && (*skip)[t] == k) continue;
        Entry e{};
        int m = 0;
        for (int j = 0; j <= D; ++j)
          if (j != k) e.key[m++] = c.v[j];
        std::sort(e.key.begin(), e.key.end());
        e.cell = ids[t];
        e.slot = k;
        entries.push_back(e);
      }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
    if (entries.size() % 2 != 0) throw ConstructionError("delaunay: inconsistent cavity boundary");
    for (std::size_t t = 0; t < entries.size(); t += 2) {
      if (entries[t].key != entries[t + 1].key) throw ConstructionError("delaunay: inconsistent cavity boundary");
      cells_[entries[t].cell].n[entries[t].slot] = entries[t + 1].cell;
      cells_[entries[t + 1].cell].n[entries[t + 1].slot] = entries[t].cell;
    }
  }

  int locate(int p) {
    int c = last_;
    if (c < 0 || !alive_[c]) {
      c = 0;
      while (!alive_[c]) ++c;
    }
    if (is_ghost(cells_[c])) c = cells_[c].n[inf_slot(cells_[c])];
    const std::size_t limit = 8 * cells_.size() + 64;
    for (std::size_t step = 0; step < limit; ++step) {
      const Cell& cell = cells_[c];
      if (is_ghost(cell)) return c;
      rotate_ = rotate_ * 1103515245u + 12345u;
      const int offset = static_cast<int>((rotate_ >> 16) % (D + 1));
      int next = -1;
      for (int t = 0; t <= D; ++t) {
        const int i = (offset + t) % (D + 1);
        if (orient_replaced(cell, i, p) < 0) {
          next = cell.n[i];
          break;
        }
      }
      if (next < 0) {
        for (int k = 0; k <= D; ++k)
          if (same_point(cell.v[k], p)) throw ConstructionError("delaunay: duplicate point " + std::to_string(p));
        return c;
      }
      c = next;
    }
    for (std::size_t id = 0; id < cells_.size(); ++id)
      if (alive_[id] && conflict(static_cast<int>(id), p)) return static_cast<int>(id);
    throw ConstructionError("delaunay: point location failed");
  }

  void insert(int p) {
    const int start = locate(p);
    if (!conflict(start, p)) throw ConstructionError("delaunay: located cell not in conflict");
    ++epoch_;
    std::vector<int>& cavity = cavity_;
    cavity.clear();
    cavity.push_back(start);
    stamp_[start] = epoch_;
    struct Boundary {
      int cell;
      int slot;
      int back;  // slot of the cavity cell in the outside neighbor
    };
    std::vector<Boundary> boundary;
    for (std::size_t head = 0; head < cavity.size(); ++head) {
      const int c = cavity[head];
      for (int k = 0; k <= D; ++k) {
        const int nb = cells_[c].n[k];
        if (stamp_[nb] == epoch_) continue;
        if (stamp_[nb] == -epoch_) {
          boundary.push_back({c, k, back_slot(nb, c)});
          continue;
        }
        if (conflict(nb, p)) {
          stamp_[nb] = epoch_;
          cavity.push_back(nb);
        } else {
          stamp_[nb] = -epoch_;
          boundary.push_back({c, k, back_slot(nb, c)});
        }
      }
    }
    std::vector<Cell> fresh;
    fresh.reserve(boundary.size());
    for (const auto& b : boundary) {
      Cell nc = cells_[b.cell];
      nc.v[b.slot] = p;
      nc.n.fill(-1);
      nc.n[b.slot] = cells_[b.cell].n[b.slot];
      fresh.push_back(nc);
    }
    for (int c : cavity) {
      alive_[c] = 0;
      free_.push_back(c);
    }
    std::vector<int> ids(fresh.size());
    std::vector<int> skip(fresh.size());
    for (std::size_t t = 0; t < fresh.size(); ++t) {
      ids[t] = new_cell(fresh[t]);
      stamp_[ids[t]] = 0;
      const int slot = boundary[t].slot;
      skip[t] = slot;
      cells_[fresh[t].n[slot]].n[boundary[t].back] = ids[t];
    }
    link(ids, &skip);
    last_ = ids.back();
    for (int id : ids)
      if (!is_ghost(cells_[id])) {
        last_ = id;
        break;
      }
  }

  Triangulation extract(const Window& window) const {
    Triangulation t;
    t.dimension = D;
    t.window = window;
    t.vertices.assign(pts_.begin(), pts_.end());
    t.fingerprint = point_fingerprint(pts_, D);
    std::vector<int> remap(cells_.size(), -1);
    int count = 0;
    for (std::size_t id = 0; id < cells_.size(); ++id)
      if (alive_[id] && !is_ghost(cells_[id])) remap[id] = count++;
    t.simplices.resize(count);
    t.neighbors.resize(count);
    t.circumcenters.resize(count);
    t.circumradii.resize(count);
    t.trusted.assign(count, 0);
    for (std::size_t id = 0; id < cells_.size(); ++id) {
      const int s = remap[id];
      if (s < 0) continue;
      std::array<int, 4> v{-1, -1, -1, -1}, n{-1, -1, -1, -1};
      std::array<const Point*, D + 1> q{};
      for (int k = 0; k <= D; ++k) {
        v[k] = cells_[id].v[k];
        n[k] = remap[cells_[id].n[k]];
        q[k] = &pts_[v[k]];
      }
      t.simplices[s] = v;
      t.neighbors[s] = n;
      Point cc{};
      if (circumcenter<D>(q, cc)) {
        t.circumcenters[s] = cc;
        t.circumradii[s] = distance(cc, *q[0], D);
      } else {
        t.circumcenters[s] = {NAN, NAN, NAN};
        t.circumradii[s] = INFINITY;
      }
      t.trusted[s] = std::isfinite(t.circumradii[s]) && window.extended_contains_ball(cc, t.circumradii[s]);
    }
    return t;
  }

  std::span<const Point> pts_;
  std::vector<Cell> cells_;
  std::vector<char> alive_;
  std::vector<int> stamp_;
  std::vector<int> free_;
  std::vector<int> cavity_;
  int epoch_ = 0;
  int last_ = -1;
  std::uint32_t rotate_ = 12345u;
};

/// Delaunay triangulation of raw points. `window` supplies the sampled
/// region used for trust flags; pass a window covering the points when no
/// sampling window applies.
inline Triangulation delaunay(std::span<const Point> points, int dim, const Window& window) {
  if (dim == 2) return DelaunayBuilder<2>(points).build(window);
  if (dim == 3) return DelaunayBuilder<3>(points).build(window);
  throw ParameterError("delaunay: dimension must be 2 or 3");
}

/// Smallest buffer-free window containing all points.
inline Window bounding_window(std::span<const Point> points, int dim) {
  Window w;
  w.dimension = dim;
  w.lower = {0.0, 0.0, 0.0};
  w.sides = {1.0, 1.0, dim == 3 ? 1.0 : 0.0};
  if (points.empty()) return w;
  Point lo = points[0], hi = points[0];
  for (const auto& p : points)
    for (int k = 0; k < dim; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  for (int k = 0; k < dim; ++k) {
    w.lower[k] = lo[k];
    w.sides[k] = std::max(hi[k] - lo[k], 1e-300);
  }
  return w;
}

/// Undirected Delaunay edges (u < v), sorted.
inline std::vector<std::pair<int, int>> delaunay_edges(const Triangulation& t) {
  std::vector<std::pair<int, int>> edges;
  const int m = t.simplex_size();
  edges.reserve(t.size() * (m * (m - 1) / 2));
  for (const auto& s : t.simplices)
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) edges.emplace_back(std::min(s[a], s[b]), std::max(s[a], s[b]));
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace geowalk
