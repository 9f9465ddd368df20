#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geowalk/delaunay.hpp"
#include "geowalk/error.hpp"
#include "geowalk/graph.hpp"
#include "geowalk/network.hpp"
#include "geowalk/parallel.hpp"
#include "geowalk/paths_chains.hpp"
#include "geowalk/point_process.hpp"
#include "geowalk/spatial_grid.hpp"
#include "geowalk/stats.hpp"

namespace geowalk {

enum class BoxVariant { VS, GAB };

inline std::string to_string(BoxVariant v) { return v == BoxVariant::VS ? "VS" : "GAB"; }

using LatticePoint = std::array<int, 3>;

/// Sub-box divisions per axis for Voronoi-skeleton good boxes: 6 ceil(sqrt d).
inline int vs_alpha(int dim) { return 6 * static_cast<int>(std::ceil(std::sqrt(static_cast<double>(dim)))); }

/// 2^{2d+2} (d + 3 + 2 (d + 3)^{3/2}).
inline double gabriel_beta(int dim) {
  const double d3 = dim + 3.0;
  return std::ldexp(1.0, 2 * dim + 2) * (d3 + 2.0 * std::pow(d3, 1.5));
}

/// The odd integer in [beta_d m^2 + sqrt d + 1, beta_d m^2 + sqrt d + 3).
inline long long gabriel_alpha(int dim, int m) {
  if (m < 1) throw ParameterError("Gabriel good boxes need m >= 1");
  const double lo = gabriel_beta(dim) * m * m + std::sqrt(static_cast<double>(dim)) + 1.0;
  auto a = static_cast<long long>(std::ceil(lo));
  if (a % 2 == 0) ++a;
  return a;
}

/// Classification parameters. For VS boxes c4 is the count constant; for
/// Gabriel boxes m is the per-sub-box cap. `alpha` overrides the number of
/// sub-box divisions per axis (0 keeps 6 ceil(sqrt d) or alpha_{d,m}).
struct BoxParameters {
  BoxVariant variant = BoxVariant::VS;
  double M = 1.0;
  double c4 = 0.0;
  int m = 0;
  long long alpha = 0;
};

struct Box {
  LatticePoint z{0, 0, 0};
  /// X_z.
  bool good = false;
  /// Classified good but no usable reference vertex; X_z was reset to 0.
  bool demoted = false;
  std::size_t count = 0;
  double empty_subboxes = 0.0;
  std::size_t overfull_subboxes = 0;
  /// Reference vertex as an origin id: a point index (GAB) or a Delaunay
  /// simplex whose circumcenter is the vertex (VS); -1 when none.
  std::int64_t reference = -1;
  Point reference_point{0.0, 0.0, 0.0};
};

struct BoxPath {
  LatticePoint z1{0, 0, 0};
  LatticePoint z2{0, 0, 0};
  /// Vertex indices in the graph the path was built on.
  std::vector<int> vertices;
  std::size_t hops = 0;
  double max_length = 0.0;
  bool valid = false;
  /// First violated assertion for demoted pairs.
  std::string failure;
  // Voronoi skeleton paths.
  std::size_t stabbed_cells = 0;
  /// stabbed cells times the largest vertex count of a stabbed cell.
  std::size_t cell_vertex_bound = 0;
  // Gabriel paths.
  std::size_t segments = 0;
  std::size_t max_long_edges = 0;
  std::size_t max_short_group = 0;
  double max_segment_squared_sum = 0.0;
  /// Largest distance from a segment vertex to its sub-box centre c_i.
  double max_segment_radius = 0.0;
};

struct BoxField {
  BoxParameters params;
  int dimension = 2;
  /// Sub-box divisions per axis used for classification.
  long long alpha = 0;
  Window window;
  /// Inclusive lattice range of the boxes lying entirely in the window.
  LatticePoint lo{0, 0, 0};
  LatticePoint hi{-1, -1, -1};
  /// Boxes meeting the window only in part: excluded.
  std::size_t partial_boxes = 0;
  std::vector<Box> boxes;
  std::vector<BoxPath> paths;
  /// Hop bound L and per-edge Euclidean length bound of the construction.
  double hop_bound = 0.0;
  double length_bound = 0.0;

  double M() const { return params.M; }

  int find(const LatticePoint& z) const {
    std::size_t idx = 0, stride = 1;
    for (int k = 0; k < dimension; ++k) {
      if (z[k] < lo[k] || z[k] > hi[k]) return -1;
      idx += static_cast<std::size_t>(z[k] - lo[k]) * stride;
      stride *= static_cast<std::size_t>(hi[k] - lo[k] + 1);
    }
    return static_cast<int>(idx);
  }

  Point center(const LatticePoint& z) const {
    Point c{0.0, 0.0, 0.0};
    for (int k = 0; k < dimension; ++k) c[k] = params.M * z[k];
    return c;
  }

  /// p in B_z = M z + [-M/2, M/2)^d.
  bool contains(const LatticePoint& z, const Point& p) const {
    for (int k = 0; k < dimension; ++k) {
      const double lo_k = params.M * z[k] - 0.5 * params.M;
      if (p[k] < lo_k || p[k] >= lo_k + params.M) return false;
    }
    return true;
  }

  std::size_t good_count() const {
    std::size_t n = 0;
    for (const auto& b : boxes) n += b.good;
    return n;
  }

  std::size_t demoted_paths() const {
    std::size_t n = 0;
    for (const auto& p : paths) n += !p.valid;
    return n;
  }
};

/// Box lattice index of p: the z with p in B_z.
inline LatticePoint box_of(const Point& p, double M, int dim) {
  LatticePoint z{0, 0, 0};
  for (int k = 0; k < dim; ++k) z[k] = static_cast<int>(std::floor(p[k] / M + 0.5));
  return z;
}

inline bool lattice_adjacent(const LatticePoint& a, const LatticePoint& b, int dim) {
  int l1 = 0;
  for (int k = 0; k < dim; ++k) l1 += std::abs(a[k] - b[k]);
  return l1 == 1;
}

/// Good-box flags over the boxes lying entirely in `window`. Gabriel boxes
/// get their reference vertex here (the point of the central sub-box
/// nearest to M z); VS reference vertices need the triangulation, see
/// assign_vs_references.
inline BoxField classify_good_boxes(std::span<const Point> points, const Window& window, const BoxParameters& params) {
  window.validate();
  const int dim = window.dimension;
  if (!(params.M >= 1.0) || !std::isfinite(params.M)) throw ParameterError("good boxes: M must be >= 1");
  BoxField f;
  f.params = params;
  f.dimension = dim;
  f.window = window;
  if (params.variant == BoxVariant::VS) {
    if (!(params.c4 > 0.0)) throw ParameterError("VS good boxes need c4 > 0");
    f.alpha = params.alpha > 0 ? params.alpha : vs_alpha(dim);
  } else {
    if (params.m < 1) throw ParameterError("Gabriel good boxes need m >= 1");
    f.alpha = params.alpha > 0 ? params.alpha : gabriel_alpha(dim, params.m);
  }
  if (f.alpha % 2 == 0 && params.variant == BoxVariant::GAB) throw ParameterError("Gabriel sub-box count must be odd");
  const double M = params.M;
  const double Md = std::pow(M, dim);
  const double d3 = std::sqrt(dim + 3.0);
  if (params.variant == BoxVariant::VS) {
    const double x = std::floor(4.0 * params.c4 * Md);
    double binom = 1.0;
    for (int k = 0; k < dim; ++k) binom *= (x - k) / (k + 1.0);
    f.hop_bound = x * std::max(binom, 0.0);
    f.length_bound = d3 * M;
  } else {
    f.hop_bound = 2.0 * std::pow(static_cast<double>(f.alpha), dim) * params.m - 1.0;
    f.length_bound = d3 * M / static_cast<double>(f.alpha);
  }
  std::size_t total_boxes = 1, meeting = 1;
  for (int k = 0; k < dim; ++k) {
    f.lo[k] = static_cast<int>(std::ceil((window.lower[k] + 0.5 * M) / M - 1e-12));
    f.hi[k] = static_cast<int>(std::floor((window.upper(k) - 0.5 * M) / M + 1e-12));
    const int mlo = static_cast<int>(std::floor(window.lower[k] / M - 0.5)) + 1;
    const int mhi = static_cast<int>(std::ceil(window.upper(k) / M + 0.5)) - 1;
    meeting *= static_cast<std::size_t>(std::max(0, mhi - mlo + 1));
    total_boxes *= static_cast<std::size_t>(std::max(0, f.hi[k] - f.lo[k] + 1));
  }
  for (int k = dim; k < 3; ++k) f.lo[k] = f.hi[k] = 0;
  f.partial_boxes = meeting - total_boxes;
  f.boxes.resize(total_boxes);
  for (std::size_t b = 0; b < total_boxes; ++b) {
    std::size_t r = b;
    for (int k = 0; k < dim; ++k) {
      const std::size_t span = static_cast<std::size_t>(f.hi[k] - f.lo[k] + 1);
      f.boxes[b].z[k] = f.lo[k] + static_cast<int>(r % span);
      r /= span;
    }
  }
  if (total_boxes == 0) return f;

  const auto alpha = static_cast<std::uint64_t>(f.alpha);
  const double sub = M / static_cast<double>(f.alpha);
  const std::uint64_t centre = (alpha - 1) / 2;
  struct Hit {
    int box;
    std::uint64_t key;
    int point;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const LatticePoint z = box_of(points[i], M, dim);
    const int b = f.find(z);
    if (b < 0) continue;
    std::uint64_t key = 0;
    for (int k = dim - 1; k >= 0; --k) {
      const double off = (points[i][k] - (M * z[k] - 0.5 * M)) / sub;
      const auto s = static_cast<std::uint64_t>(std::clamp(std::floor(off), 0.0, static_cast<double>(alpha - 1)));
      key = key * alpha + s;
    }
    hits.push_back({b, key, static_cast<int>(i)});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return std::tie(a.box, a.key, a.point) < std::tie(b.box, b.key, b.point);
  });
  std::uint64_t centre_key = 0;
  for (int k = 0; k < dim; ++k) centre_key = centre_key * alpha + centre;
  const double subboxes = std::pow(static_cast<double>(alpha), dim);
  std::vector<double> distinct(total_boxes, 0.0);
  std::vector<double> best(total_boxes, std::numeric_limits<double>::infinity());
  for (std::size_t h = 0; h < hits.size();) {
    std::size_t e = h;
    while (e < hits.size() && hits[e].box == hits[h].box && hits[e].key == hits[h].key) ++e;
    Box& box = f.boxes[hits[h].box];
    const std::size_t mult = e - h;
    box.count += mult;
    distinct[hits[h].box] += 1.0;
    if (params.variant == BoxVariant::GAB && mult > static_cast<std::size_t>(params.m)) ++box.overfull_subboxes;
    if (hits[h].key == centre_key) {
      const Point c = f.center(box.z);
      for (std::size_t t = h; t < e; ++t) {
        const double d = squared_distance(points[hits[t].point], c, dim);
        if (d < best[hits[h].box]) {
          best[hits[h].box] = d;
          box.reference = hits[t].point;
          box.reference_point = points[hits[t].point];
        }
      }
    }
    h = e;
  }
  for (std::size_t b = 0; b < total_boxes; ++b) {
    Box& box = f.boxes[b];
    box.empty_subboxes = subboxes - distinct[b];
    if (params.variant == BoxVariant::VS) {
      box.good = static_cast<double>(box.count) <= 2.0 * params.c4 * Md && box.empty_subboxes == 0.0;
      box.reference = -1;
    } else {
      box.good = box.empty_subboxes == 0.0 && box.overfull_subboxes == 0;
      if (!box.good) box.reference = -1;
    }
  }
  return f;
}

inline BoxField classify_good_boxes_vs(std::span<const Point> points, const Window& window, double M, double c4) {
  return classify_good_boxes(points, window, {BoxVariant::VS, M, c4, 0, 0});
}

inline BoxField classify_good_boxes_gabriel(std::span<const Point> points, const Window& window, double M, int m,
                                            long long alpha = 0) {
  if (m < 1) throw ParameterError("Gabriel good boxes need m >= 1");
  return classify_good_boxes(points, window, {BoxVariant::GAB, M, 0.0, m, alpha});
}

// ---------------------------------------------------------------------------
// Voronoi skeleton paths.

/// Lookup tables shared by all VS box paths over one triangulation.
struct VsPathContext {
  const GeometricGraph& vs;
  const Triangulation& dt;
  std::vector<std::vector<int>> point_neighbors;
  std::vector<std::vector<int>> incident;
  /// VS vertex of each simplex, -1 when trimmed away.
  std::vector<int> vertex_of_simplex;
  Adjacency adj;
  SpatialGrid grid;

  VsPathContext(const GeometricGraph& vs_graph, const Triangulation& t)
      : vs(vs_graph), dt(t), grid(t.vertices, t.dimension) {
    if (vs.kind != GraphKind::VS) throw UsageError("VS box paths need a Voronoi skeleton");
    if (vs.fingerprint != t.fingerprint) throw UsageError("VS box paths: graph and triangulation differ");
    point_neighbors.resize(t.vertices.size());
    for (auto [u, v] : delaunay_edges(t)) {
      point_neighbors[u].push_back(v);
      point_neighbors[v].push_back(u);
    }
    incident.resize(t.vertices.size());
    for (std::size_t s = 0; s < t.size(); ++s)
      for (int k = 0; k < t.simplex_size(); ++k) incident[t.simplices[s][k]].push_back(static_cast<int>(s));
    vertex_of_simplex.assign(t.size(), -1);
    for (std::size_t i = 0; i < vs.vertices.size(); ++i) vertex_of_simplex[vs.origin[i]] = static_cast<int>(i);
    adj = adjacency(vs);
  }

  /// Nuclei of the Voronoi cells met by the segment [a, b], in order.
  std::vector<int> stabbed_cells(const Point& a, const Point& b) const {
    const int dim = dt.dimension;
    std::vector<int> out;
    auto p0 = grid.nearest(a);
    if (p0 < 0) return out;
    int p = static_cast<int>(p0);
    out.push_back(p);
    double t = 0.0;
    for (std::size_t guard = 0; guard < dt.vertices.size(); ++guard) {
      double best_t = std::numeric_limits<double>::infinity();
      int best_q = -1;
      for (int q : point_neighbors[p]) {
        double denom = 0.0;
        for (int k = 0; k < dim; ++k) denom += 2.0 * (b[k] - a[k]) * (dt.vertices[q][k] - dt.vertices[p][k]);
        if (!(denom > 0.0)) continue;
        const double tq = (squared_distance(a, dt.vertices[q], dim) - squared_distance(a, dt.vertices[p], dim)) / denom;
        if (tq < t - 1e-12) continue;
        if (std::find(out.begin(), out.end(), q) != out.end()) continue;
        if (tq < best_t || (tq == best_t && q < best_q)) {
          best_t = tq;
          best_q = q;
        }
      }
      if (best_q < 0 || best_t > 1.0) break;
      p = best_q;
      t = std::max(t, best_t);
      out.push_back(p);
    }
    return out;
  }
};

/// Picks, for each good box, the vertex of the Voronoi cell containing M z
/// nearest to M z; boxes whose choice falls outside B_z or outside the graph
/// are demoted.
inline void assign_vs_references(BoxField& field, const VsPathContext& ctx) {
  if (field.params.variant != BoxVariant::VS) throw UsageError("VS references on a Gabriel field");
  const int dim = field.dimension;
  for (auto& box : field.boxes) {
    if (!box.good) continue;
    const Point c = field.center(box.z);
    const auto p = ctx.grid.nearest(c);
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    if (p >= 0)
      for (int s : ctx.incident[p]) {
        if (ctx.vertex_of_simplex[s] < 0) continue;
        const double d = squared_distance(ctx.dt.circumcenters[s], c, dim);
        if (d < bd) {
          bd = d;
          best = s;
        }
      }
    if (best < 0 || !field.contains(box.z, ctx.dt.circumcenters[best])) {
      box.good = false;
      box.demoted = true;
      box.reference = -1;
      continue;
    }
    box.reference = best;
    box.reference_point = ctx.dt.circumcenters[best];
  }
}

namespace detail {

inline std::pair<const Box*, const Box*> path_boxes(const BoxField& field, const LatticePoint& z1, const LatticePoint& z2) {
  const int b1 = field.find(z1), b2 = field.find(z2);
  if (b1 < 0 || b2 < 0) throw UsageError("box path: box outside the field");
  const Box* a = &field.boxes[b1];
  const Box* b = &field.boxes[b2];
  if (!a->good || !b->good || a->reference < 0 || b->reference < 0) throw UsageError("box path: boxes must be good");
  if (z1 != z2 && !lattice_adjacent(z1, z2, field.dimension)) throw UsageError("box path: boxes must be adjacent");
  return {a, b};
}

inline void check_box_path(const BoxField& field, const GeometricGraph& g, BoxPath& path) {
  path.hops = path.vertices.empty() ? 0 : path.vertices.size() - 1;
  for (std::size_t j = 0; j + 1 < path.vertices.size(); ++j)
    path.max_length = std::max(path.max_length, distance(g.vertices[path.vertices[j]], g.vertices[path.vertices[j + 1]], g.dimension));
  path.valid = true;
  for (int v : path.vertices)
    if (!field.contains(path.z1, g.vertices[v]) && !field.contains(path.z2, g.vertices[v])) {
      path.valid = false;
      path.failure = "path leaves the union of its two boxes";
      return;
    }
  if (static_cast<double>(path.hops) > field.hop_bound) {
    path.valid = false;
    path.failure = "hop count exceeds L";
    return;
  }
  if (path.max_length > field.length_bound) {
    path.valid = false;
    path.failure = "edge longer than the length bound";
  }
}

}  // namespace detail

/// Shortest-hop VS path between the reference vertices of two adjacent good
/// boxes, using only edges on the boundary of cells met by [M z1, M z2].
/// Failed assertions mark the path invalid (the pair is demoted).
inline BoxPath build_box_path_vs(const VsPathContext& ctx, const BoxField& field, const LatticePoint& z1,
                                 const LatticePoint& z2) {
  const auto [b1, b2] = detail::path_boxes(field, z1, z2);
  BoxPath out;
  out.z1 = z1;
  out.z2 = z2;
  if (z1 == z2) {
    out.valid = true;
    return out;
  }
  const auto cells = ctx.stabbed_cells(field.center(z1), field.center(z2));
  out.stabbed_cells = cells.size();
  std::size_t most = 0;
  std::vector<char> stabbed(ctx.dt.vertices.size(), 0);
  std::vector<char> allowed(ctx.vs.vertices.size(), 0);
  for (int p : cells) {
    stabbed[p] = 1;
    most = std::max(most, ctx.incident[p].size());
    for (int s : ctx.incident[p])
      if (ctx.vertex_of_simplex[s] >= 0) allowed[ctx.vertex_of_simplex[s]] = 1;
  }
  out.cell_vertex_bound = cells.size() * most;
  const int src = ctx.vertex_of_simplex[b1->reference];
  const int dst = ctx.vertex_of_simplex[b2->reference];
  if (src < 0 || dst < 0 || !allowed[src] || !allowed[dst]) {
    out.failure = "reference vertex is not on a stabbed cell";
    return out;
  }
  auto on_stabbed_facet = [&](int u, int v) {
    const auto& su = ctx.dt.simplices[ctx.vs.origin[u]];
    const auto& sv = ctx.dt.simplices[ctx.vs.origin[v]];
    for (int k = 0; k < ctx.dt.simplex_size(); ++k)
      if (stabbed[su[k]] && std::find(sv.begin(), sv.begin() + ctx.dt.simplex_size(), su[k]) != sv.begin() + ctx.dt.simplex_size())
        return true;
    return false;
  };
  std::vector<int> parent(ctx.vs.vertices.size(), -2);
  std::deque<int> queue{src};
  parent[src] = -1;
  while (!queue.empty() && parent[dst] == -2) {
    const int u = queue.front();
    queue.pop_front();
    for (auto [v, e] : ctx.adj[u]) {
      if (parent[v] != -2 || !allowed[v] || !on_stabbed_facet(u, v)) continue;
      parent[v] = u;
      queue.push_back(v);
    }
  }
  if (parent[dst] == -2) {
    out.failure = "no path along stabbed cells";
    return out;
  }
  for (int v = dst; v != -1; v = parent[v]) out.vertices.push_back(v);
  std::reverse(out.vertices.begin(), out.vertices.end());
  detail::check_box_path(field, ctx.vs, out);
  if (out.valid && out.hops > out.cell_vertex_bound) {
    out.valid = false;
    out.failure = "hop count exceeds the stabbed-cell vertex count";
  }
  return out;
}

inline BoxPath build_box_path_vs(const GeometricGraph& vs, const Triangulation& dt, const BoxField& field,
                                 const LatticePoint& z1, const LatticePoint& z2) {
  return build_box_path_vs(VsPathContext(vs, dt), field, z1, z2);
}

// ---------------------------------------------------------------------------
// Gabriel paths.

/// Concatenation of short Gabriel paths between the points v_0 .. v_alpha
/// nearest to the centres c_i of the sub-boxes met by [M z1, M z2]. Each
/// segment is checked against the ball B(c_i, M/2), the per-hop and squared
/// length budgets, the long-edge count and the short-group size; the whole
/// path against containment, the hop bound and the length bound.
inline BoxPath build_box_path_gabriel(const GabrielPathFinder& finder, const GeometricGraph& gab, const BoxField& field,
                                      const LatticePoint& z1, const LatticePoint& z2) {
  if (field.params.variant != BoxVariant::GAB) throw UsageError("Gabriel box path on a VS field");
  const auto [b1, b2] = detail::path_boxes(field, z1, z2);
  BoxPath out;
  out.z1 = z1;
  out.z2 = z2;
  if (z1 == z2) {
    out.valid = true;
    return out;
  }
  const int dim = field.dimension;
  const auto points = finder.points();
  const double M = field.M();
  const double alpha = static_cast<double>(field.alpha);
  const double step = M / alpha;
  const int m = field.params.m;
  int axis = 0;
  while (z1[axis] == z2[axis]) ++axis;
  const int dir = z2[axis] > z1[axis] ? 1 : -1;
  const Point a = field.center(z1);
  std::vector<int> v(field.alpha + 1, -1);
  std::vector<Point> c(field.alpha + 1, a);
  SpatialGrid grid(points, dim);
  for (long long i = 0; i <= field.alpha; ++i) {
    c[i][axis] = a[axis] + dir * static_cast<double>(i) * step;
    Point lo = c[i], hi = c[i];
    for (int k = 0; k < dim; ++k) {
      lo[k] -= 0.5 * step;
      hi[k] += 0.5 * step;
    }
    double bd = std::numeric_limits<double>::infinity();
    grid.for_each_in_box(lo, hi, [&](std::size_t w) {
      for (int k = 0; k < dim; ++k)
        if (points[w][k] >= hi[k]) return;
      const double d = squared_distance(points[w], c[i], dim);
      if (d < bd || (d == bd && static_cast<int>(w) < v[i])) {
        bd = d;
        v[i] = static_cast<int>(w);
      }
    });
    if (v[i] < 0) {
      out.failure = "empty sub-box on the segment";
      return out;
    }
  }
  v.front() = static_cast<int>(b1->reference);
  v.back() = static_cast<int>(b2->reference);
  const double long_cut = M / (std::ldexp(1.0, dim + 1) * alpha * m);
  const double long_cap = std::ldexp(1.0, 2 * dim + 2) * (dim + 3.0) * m * m;
  const double short_cap = std::ldexp(1.0, dim) * m - 1.0;
  const double sq_cap = (dim + 3.0) * step * step;
  std::vector<int> seq{v.front()};
  for (long long i = 0; i < field.alpha; ++i) {
    const GabrielPath seg = finder.path(v[i], v[i + 1]);
    ++out.segments;
    std::size_t longs = 0, run = 0;
    for (std::size_t j = 0; j < seg.squared_hops.size(); ++j) {
      const double len = std::sqrt(seg.squared_hops[j]);
      if (len >= long_cut) {
        ++longs;
        run = 0;
      } else {
        out.max_short_group = std::max(out.max_short_group, ++run);
      }
      if (out.failure.empty() && seg.squared_hops[j] > sq_cap) out.failure = "segment hop longer than sqrt(d+3) M / alpha";
    }
    out.max_long_edges = std::max(out.max_long_edges, longs);
    out.max_segment_squared_sum = std::max(out.max_segment_squared_sum, seg.squared_sum);
    for (int x : seg.vertices) out.max_segment_radius = std::max(out.max_segment_radius, distance(points[x], c[i], dim));
    if (out.failure.empty()) {
      if (!seg.certified) out.failure = "segment exceeds its squared-length certificate";
      else if (seg.squared_sum > sq_cap) out.failure = "segment squared lengths exceed (d+3) M^2 / alpha^2";
      else if (out.max_segment_radius > 0.5 * M) out.failure = "segment leaves B(c_i, M/2)";
      else if (static_cast<double>(longs) > long_cap) out.failure = "too many long edges in a segment";
      else if (static_cast<double>(out.max_short_group) > short_cap) out.failure = "short-edge group longer than 2^d m - 1";
    }
    seq.insert(seq.end(), seg.vertices.begin() + 1, seg.vertices.end());
  }
  // Simple path: cut cycles at repeated vertices.
  std::vector<int> simple;
  std::unordered_map<int, std::size_t> pos;
  for (int x : seq) {
    auto it = pos.find(x);
    if (it != pos.end()) {
      for (std::size_t k = it->second + 1; k < simple.size(); ++k) pos.erase(simple[k]);
      simple.resize(it->second + 1);
      continue;
    }
    pos[x] = simple.size();
    simple.push_back(x);
  }
  std::unordered_map<std::int64_t, int> vertex_of;
  for (std::size_t i = 0; i < gab.vertices.size(); ++i) vertex_of[gab.origin[i]] = static_cast<int>(i);
  for (int x : simple) {
    auto it = vertex_of.find(x);
    if (it == vertex_of.end()) {
      out.failure = "path vertex missing from the graph";
      return out;
    }
    out.vertices.push_back(it->second);
  }
  const std::string segment_failure = out.failure;
  detail::check_box_path(field, gab, out);
  if (!segment_failure.empty()) {
    out.valid = false;
    out.failure = segment_failure;
  }
  return out;
}

inline BoxPath build_box_path_gabriel(std::span<const Point> points, const GeometricGraph& gab, const BoxField& field,
                                      const LatticePoint& z1, const LatticePoint& z2) {
  return build_box_path_gabriel(GabrielPathFinder(points, gab), gab, field, z1, z2);
}

/// Adjacent good pairs (z, z + e_k), in box order.
inline std::vector<std::pair<LatticePoint, LatticePoint>> adjacent_good_pairs(const BoxField& field) {
  std::vector<std::pair<LatticePoint, LatticePoint>> out;
  for (const auto& b : field.boxes) {
    if (!b.good) continue;
    for (int k = 0; k < field.dimension; ++k) {
      LatticePoint z = b.z;
      ++z[k];
      const int n = field.find(z);
      if (n >= 0 && field.boxes[n].good) out.push_back({b.z, z});
    }
  }
  return out;
}

/// Builds and stores paths for every adjacent good pair of a VS field.
inline void build_all_box_paths_vs(BoxField& field, const VsPathContext& ctx, unsigned threads = 1) {
  const auto pairs = adjacent_good_pairs(field);
  std::vector<BoxPath> paths(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t k) { paths[k] = build_box_path_vs(ctx, field, pairs[k].first, pairs[k].second); });
  field.paths = std::move(paths);
}

inline void build_all_box_paths_gabriel(BoxField& field, const GabrielPathFinder& finder, const GeometricGraph& gab,
                                        unsigned threads = 1) {
  const auto pairs = adjacent_good_pairs(field);
  std::vector<BoxPath> paths(pairs.size());
  parallel_for(pairs.size(), threads,
               [&](std::size_t k) { paths[k] = build_box_path_gabriel(finder, gab, field, pairs[k].first, pairs[k].second); });
  field.paths = std::move(paths);
}

// ---------------------------------------------------------------------------
// Rough embedding.

struct RoughEmbedding {
  /// max over stored valid paths of the summed edge resistance (lattice
  /// edges have resistance 1).
  double alpha = 0.0;
  /// max over network edges of the number of valid paths using it.
  std::size_t beta = 0;
  double K = 0.0;
  double L = 0.0;
  bool alpha_ok = true;
  bool beta_ok = true;
  std::size_t paths_used = 0;
};

/// Per-edge resistance bound K: 1 / phi(sqrt(d+3) M) for decreasing
/// conductances, 1 / inf C otherwise.
inline double resistance_bound(const ConductanceModel& model, double M, int dim) {
  if (model.decreasing()) return 1.0 / model(std::sqrt(dim + 3.0) * M);
  return 1.0 / *model.inf();
}

/// Realized rough-embedding constants of the stored paths of `field`; `net`
/// must be built on the graph the paths index.
inline RoughEmbedding verify_rough_embedding(const BoxField& field, const Network& net) {
  RoughEmbedding out;
  out.K = resistance_bound(net.model, field.M(), field.dimension);
  out.L = field.hop_bound;
  std::vector<std::size_t> use(net.graph.edges.size(), 0);
  for (const auto& p : field.paths) {
    if (!p.valid || p.vertices.size() < 2) continue;
    ++out.paths_used;
    double r = 0.0;
    for (std::size_t j = 0; j + 1 < p.vertices.size(); ++j) {
      const int e = detail::edge_index(net.graph.edges, std::min(p.vertices[j], p.vertices[j + 1]),
                                       std::max(p.vertices[j], p.vertices[j + 1]));
      if (e < 0) throw UsageError("rough embedding: path edge missing from the network");
      r += 1.0 / net.conductance[e];
      out.beta = std::max(out.beta, ++use[e]);
    }
    out.alpha = std::max(out.alpha, r);
  }
  out.alpha_ok = out.alpha <= out.K * out.L;
  out.beta_ok = out.beta <= static_cast<std::size_t>(2 * field.dimension);
  return out;
}

// ---------------------------------------------------------------------------
// Good-box probability.

struct GoodBoxProbability {
  ProportionEstimate probability;
  double p_star = 0.99;
  /// estimate - 2 SE >= p*.
  bool meets_target = false;
  /// VS: e^{-c4 M^d} + alpha_d^d e^{-c1 M^d / alpha_d^d} when c1 is given.
  std::optional<double> failure_bound;
  /// Gabriel: the admissible range of M^d given c1, c4, m and p*.
  std::optional<std::pair<double, double>> admissible_volume;
  bool admissible = false;
};

/// Poisson sample around the adjacent boxes B_0 and B_{e_1} conditioned on
/// both being Gabriel-good: every sub-box count is Poisson(lambda vol)
/// conditioned on [1, m] with uniform positions; the buffer is unconditioned.
inline PointSet sample_conditioned_gabriel_pair(int dim, double M, int m, long long alpha, double lambda, double buffer,
                                                std::uint64_t seed) {
  if (m < 1 || alpha < 1 || alpha % 2 == 0) throw ParameterError("conditioned pair needs m >= 1 and odd alpha");
  if (!(lambda > 0.0) || !(M > 0.0)) throw ParameterError("conditioned pair needs lambda > 0 and M > 0");
  PointSet out;
  out.window = Window::cube(dim, -0.5 * M, M, buffer);
  out.window.sides[0] = 2.0 * M;
  out.process = ProcessDescriptor::poisson(lambda);
  out.seed = seed;
  Rng rng(seed);
  const double sub = M / static_cast<double>(alpha);
  const double mean = lambda * std::pow(sub, dim);
  const auto per_box = static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(alpha), dim)));
  for (int b = 0; b < 2; ++b) {
    for (std::uint64_t s = 0; s < per_box; ++s) {
      std::uint64_t n = 0;
      do {
        n = rng.poisson(mean);
      } while (n < 1 || n > static_cast<std::uint64_t>(m));
      Point lo{};
      std::uint64_t r = s;
      for (int k = dim - 1; k >= 0; --k) {
        lo[k] = -0.5 * M + static_cast<double>(r % alpha) * sub;
        r /= alpha;
      }
      lo[0] += b * M;
      for (std::uint64_t j = 0; j < n; ++j) {
        Point p{};
        for (int k = 0; k < dim; ++k) p[k] = lo[k] + rng.uniform() * sub;
        out.points.push_back(p);
      }
    }
  }
  const auto& w = out.window;
  const std::uint64_t n = rng.poisson(lambda * w.extended_volume());
  for (std::uint64_t j = 0; j < n; ++j) {
    Point p{};
    for (int k = 0; k < dim; ++k) p[k] = rng.uniform(w.extended_lower(k), w.extended_upper(k));
    bool inside = true;
    for (int k = 0; k < dim; ++k) inside = inside && p[k] >= w.lower[k] && p[k] < w.upper(k);
    if (!inside) out.points.push_back(p);
  }
  out.ids.resize(out.points.size());
  for (std::size_t j = 0; j < out.ids.size(); ++j) out.ids[j] = j;
  return out;
}

/// Monte Carlo estimate of P[X_0 = 1] for the box B_0 under `desc`; replica k
/// samples [-M/2, M/2]^d with seed derive_seed(seed, k).
inline GoodBoxProbability estimate_good_box_probability(const ProcessDescriptor& desc, int dim, const BoxParameters& params,
                                                        std::size_t replicas, std::uint64_t seed, double p_star = 0.99,
                                                        std::optional<double> c1 = std::nullopt, unsigned threads = 1) {
  desc.validate();
  if (replicas < 100) throw ParameterError("good-box probability needs at least 100 replicas");
  if (!(p_star > 0.0 && p_star < 1.0)) throw ParameterError("p* must lie in (0, 1)");
  const Window w = Window::cube(dim, -0.5 * params.M, params.M);
  classify_good_boxes({}, w, params);
  std::vector<char> good(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t k) {
    const PointSet s = sample(desc, w, derive_seed(seed, k));
    good[k] = classify_good_boxes(s.points, w, params).boxes.front().good;
  });
  std::size_t hits = 0;
  for (char g : good) hits += g;
  GoodBoxProbability out;
  out.probability = proportion(hits, replicas);
  out.p_star = p_star;
  out.meets_target = out.probability.estimate - 2.0 * out.probability.standard_error >= p_star;
  const double Md = std::pow(params.M, dim);
  if (c1 && params.variant == BoxVariant::VS) {
    const double ad = std::pow(static_cast<double>(params.alpha > 0 ? params.alpha : vs_alpha(dim)), dim);
    out.failure_bound = std::exp(-params.c4 * Md) + ad * std::exp(-*c1 * Md / ad);
  }
  if (c1 && params.variant == BoxVariant::GAB && params.c4 > 0.0) {
    const double ad = std::pow(static_cast<double>(params.alpha > 0 ? params.alpha : gabriel_alpha(dim, params.m)), dim);
    const double lg = std::log(2.0 * ad / (1.0 - p_star));
    out.admissible_volume = std::make_pair(ad / *c1 * lg, ad / params.c4 * (params.m - lg));
    out.admissible = out.admissible_volume->first <= out.admissible_volume->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dependence of box flags.

struct FlagCorrelation {
  int lag = 1;
  double correlation = 0.0;
  double standard_error = 0.0;
  std::size_t pairs = 0;
  bool within_3se = true;
};

/// Lattice distance beyond which flags are independent under interaction
/// range R: ceil(R / M) + 1.
inline int dependence_lag(double R, double M) { return static_cast<int>(std::ceil(R / M)) + 1; }

/// Pooled correlation of (X_z, X_{z + lag e_axis}) over the fields.
inline FlagCorrelation box_flag_correlation(const std::vector<BoxField>& fields, int lag, int axis = 0) {
  FlagCorrelation out;
  out.lag = lag;
  std::vector<double> x, y;
  for (const auto& f : fields)
    for (const auto& b : f.boxes) {
      LatticePoint z = b.z;
      z[axis] += lag;
      const int n = f.find(z);
      if (n < 0) continue;
      x.push_back(b.good);
      y.push_back(f.boxes[n].good);
    }
  out.pairs = x.size();
  out.correlation = pearson(x, y);
  out.standard_error = out.pairs > 1 ? 1.0 / std::sqrt(static_cast<double>(out.pairs)) : 1.0;
  out.within_3se = std::fabs(out.correlation) <= 3.0 * out.standard_error;
  return out;
}

}  // namespace geowalk
