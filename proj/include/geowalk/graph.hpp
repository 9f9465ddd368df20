#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "geowalk/delaunay.hpp"
#include "geowalk/error.hpp"
#include "geowalk/point.hpp"
#include "geowalk/point_process.hpp"
#include "geowalk/predicates.hpp"
#include "geowalk/spatial_grid.hpp"

namespace geowalk {

enum class GraphKind { DT, GAB, VS };

inline std::string to_string(GraphKind k) {
  switch (k) {
    case GraphKind::DT:
      return "DT";
    case GraphKind::GAB:
      return "GAB";
    case GraphKind::VS:
      return "VS";
  }
  return "?";
}

inline GraphKind graph_kind_from_string(const std::string& s) {
  if (s == "DT" || s == "dt" || s == "delaunay") return GraphKind::DT;
  if (s == "GAB" || s == "gab" || s == "gabriel") return GraphKind::GAB;
  if (s == "VS" || s == "vs" || s == "voronoi") return GraphKind::VS;
  throw ParameterError("unknown graph kind '" + s + "'");
}

struct Edge {
  int u = 0;
  int v = 0;
  double length = 0.0;
};

/// Undirected graph embedded in R^d.
///
/// For DT and GAB, origin[i] is the index of vertex i in the source point
/// list; for VS it is the Delaunay simplex whose circumcenter vertex i is.
/// Edges satisfy u < v and are sorted.
struct GeometricGraph {
  GraphKind kind = GraphKind::DT;
  int dimension = 2;
  std::vector<Point> vertices;
  std::vector<Edge> edges;
  std::vector<std::int64_t> origin;
  /// Sampling window of the source points.
  Window window;
  /// Whether the geometry certifying each edge/vertex lies in the sampled region.
  std::vector<char> edge_trusted;
  std::vector<char> vertex_trusted;
  /// Unbounded Voronoi edges at the hull that were dropped.
  std::size_t dropped_unbounded = 0;
  bool trimmed = false;
  /// Set when trimming ran without a collar, so nothing could be certified.
  bool untrusted_boundary = false;
  /// Set when uncertified edges touch the analysis region.
  bool trim_warning = false;
  /// Vertices removed by trimming because they were cut off from the main
  /// component (connected only through edges outside the region).
  std::size_t detached_vertices = 0;
  std::uint64_t fingerprint = 0;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t edge_count() const { return edges.size(); }
};

/// Adjacency lists: for vertex u, pairs (neighbor, edge index).
using Adjacency = std::vector<std::vector<std::pair<int, int>>>;

inline Adjacency adjacency(const GeometricGraph& g) {
  Adjacency adj(g.vertices.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    adj[g.edges[e].u].emplace_back(g.edges[e].v, static_cast<int>(e));
    adj[g.edges[e].v].emplace_back(g.edges[e].u, static_cast<int>(e));
  }
  return adj;
}

/// Connected component label per vertex (labels in order of first vertex).
inline std::vector<int> components(const GeometricGraph& g, int* count = nullptr) {
  const auto adj = adjacency(g);
  std::vector<int> label(g.vertices.size(), -1);
  int next = 0;
  std::vector<int> stack;
  for (std::size_t s = 0; s < label.size(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.assign(1, static_cast<int>(s));
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (auto [v, e] : adj[u])
        if (label[v] < 0) {
          label[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

inline bool is_connected(const GeometricGraph& g) {
  int count = 0;
  components(g, &count);
  return count <= 1;
}

namespace detail {

inline int edge_index(const std::vector<Edge>& edges, int u, int v) {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v), [](const Edge& e, const std::pair<int, int>& k) {
    return std::make_pair(e.u, e.v) < k;
  });
  if (it == edges.end() || it->u != u || it->v != v) return -1;
  return static_cast<int>(it - edges.begin());
}

}  // namespace detail

/// Graph from explicit vertices and vertex pairs (kind defaults to DT).
/// Pairs are normalised to u < v and sorted; self-loops and duplicates are
/// rejected.
inline GeometricGraph graph_from_edges(int dim, std::vector<Point> vertices, const std::vector<std::pair<int, int>>& pairs,
                                       GraphKind kind = GraphKind::DT) {
  GeometricGraph g;
  g.kind = kind;
  g.dimension = dim;
  g.vertices = std::move(vertices);
  g.origin.resize(g.vertices.size());
  for (std::size_t i = 0; i < g.vertices.size(); ++i) g.origin[i] = static_cast<std::int64_t>(i);
  const int n = static_cast<int>(g.vertices.size());
  for (auto [u, v] : pairs) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw UsageError("graph_from_edges: vertex out of range");
    if (u == v) throw UsageError("graph_from_edges: self-loop");
    if (u > v) std::swap(u, v);
    g.edges.push_back({u, v, distance(g.vertices[u], g.vertices[v], dim)});
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  for (std::size_t e = 1; e < g.edges.size(); ++e)
    if (g.edges[e].u == g.edges[e - 1].u && g.edges[e].v == g.edges[e - 1].v) throw UsageError("graph_from_edges: duplicate edge");
  g.edge_trusted.assign(g.edges.size(), 1);
  g.vertex_trusted.assign(g.vertices.size(), 1);
  return g;
}

/// Delaunay graph: vertices are the triangulated points, edges are the
/// simplex edges. An edge is trusted when some incident simplex is.
inline GeometricGraph delaunay_graph(const Triangulation& t) {
  GeometricGraph g;
  g.kind = GraphKind::DT;
  g.dimension = t.dimension;
  g.window = t.window;
  g.vertices = t.vertices;
  g.fingerprint = t.fingerprint;
  g.origin.resize(t.vertices.size());
  for (std::size_t i = 0; i < t.vertices.size(); ++i) g.origin[i] = static_cast<std::int64_t>(i);
  for (auto [u, v] : delaunay_edges(t)) g.edges.push_back({u, v, distance(t.vertices[u], t.vertices[v], t.dimension)});
  g.edge_trusted.assign(g.edges.size(), 0);
  g.vertex_trusted.assign(g.vertices.size(), 0);
  const int m = t.simplex_size();
  for (std::size_t s = 0; s < t.size(); ++s) {
    if (!t.trusted[s]) continue;
    for (int a = 0; a < m; ++a) {
      g.vertex_trusted[t.simplices[s][a]] = 1;
      for (int b = a + 1; b < m; ++b) g.edge_trusted[detail::edge_index(g.edges, t.simplices[s][a], t.simplices[s][b])] = 1;
    }
  }
  return g;
}

/// Whether the open ball with diameter [u, v] contains no point of `points`.
inline bool diametral_ball_empty(std::span<const Point> points, const SpatialGrid& grid, int u, int v, int dim) {
  const Point& a = points[u];
  const Point& b = points[v];
  Point c{0.0, 0.0, 0.0};
  for (int k = 0; k < dim; ++k) c[k] = 0.5 * (a[k] + b[k]);
  const double r = 0.5 * distance(a, b, dim) * (1.0 + 1e-9) + 1e-300;
  bool empty = true;
  grid.for_each_in_ball(c, r, [&](std::size_t w) {
    if (!empty || static_cast<int>(w) == u || static_cast<int>(w) == v) return;
    if (predicates::diametral(a, b, points[w], dim) < 0) empty = false;
  });
  return empty;
}

/// Gabriel graph as the subgraph of Delaunay edges with empty open
/// diametral ball. Trusted when the diametral ball lies in the sampled region.
inline GeometricGraph gabriel(std::span<const Point> points, const Triangulation& t) {
  if (points.size() != t.vertices.size() || point_fingerprint(points, t.dimension) != t.fingerprint)
    throw UsageError("gabriel: triangulation was built over a different point set");
  const int dim = t.dimension;
  SpatialGrid grid(points, dim);
  GeometricGraph g;
  g.kind = GraphKind::GAB;
  g.dimension = dim;
  g.window = t.window;
  g.vertices.assign(points.begin(), points.end());
  g.fingerprint = t.fingerprint;
  g.origin.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) g.origin[i] = static_cast<std::int64_t>(i);
  for (auto [u, v] : delaunay_edges(t)) {
    if (!diametral_ball_empty(points, grid, u, v, dim)) continue;
    g.edges.push_back({u, v, distance(points[u], points[v], dim)});
    Point c{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) c[k] = 0.5 * (points[u][k] + points[v][k]);
    g.edge_trusted.push_back(t.window.extended_contains_ball(c, 0.5 * g.edges.back().length));
  }
  g.vertex_trusted.assign(points.size(), 0);
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    if (g.edge_trusted[e]) g.vertex_trusted[g.edges[e].u] = g.vertex_trusted[g.edges[e].v] = 1;
  return g;
}

inline GeometricGraph gabriel(const PointSet& points, const Triangulation& t) { return gabriel(points.points, t); }

/// Voronoi skeleton: one vertex per Delaunay simplex (its circumcenter) and
/// one edge per interior Delaunay facet. Hull facets would give unbounded
/// rays; they are dropped and counted.
inline GeometricGraph voronoi_skeleton(const Triangulation& t) {
  GeometricGraph g;
  g.kind = GraphKind::VS;
  g.dimension = t.dimension;
  g.window = t.window;
  g.fingerprint = t.fingerprint;
  g.vertices = t.circumcenters;
  g.origin.resize(t.size());
  g.vertex_trusted.resize(t.size());
  for (std::size_t s = 0; s < t.size(); ++s) {
    g.origin[s] = static_cast<std::int64_t>(s);
    g.vertex_trusted[s] = t.trusted[s];
  }
  const int m = t.simplex_size();
  for (std::size_t s = 0; s < t.size(); ++s) {
    for (int k = 0; k < m; ++k) {
      const int nb = t.neighbors[s][k];
      if (nb < 0) {
        ++g.dropped_unbounded;
        continue;
      }
      if (static_cast<int>(s) < nb)
        g.edges.push_back({static_cast<int>(s), nb, distance(t.circumcenters[s], t.circumcenters[nb], t.dimension)});
    }
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  g.edge_trusted.resize(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) g.edge_trusted[e] = t.trusted[g.edges[e].u] && t.trusted[g.edges[e].v];
  return g;
}

/// Builds the requested graph from a point list.
inline GeometricGraph build_graph(GraphKind kind, std::span<const Point> points, const Triangulation& t) {
  switch (kind) {
    case GraphKind::DT:
      return delaunay_graph(t);
    case GraphKind::GAB:
      return gabriel(points, t);
    case GraphKind::VS:
      return voronoi_skeleton(t);
  }
  throw ParameterError("unknown graph kind");
}

/// Restricts a graph to the part certified by the sampled region around
/// `region`: keeps trusted edges with at least one endpoint in the region,
/// their endpoints, and trusted vertices inside the region, then retains the
/// largest connected component. Vertices are renumbered; `origin` keeps
/// pointing at the source points or simplices.
inline GeometricGraph trim_to_analysis_region(const GeometricGraph& g, const Window& region) {
  region.validate();
  if (region.dimension != g.dimension) throw ParameterError("trim: dimension mismatch");
  GeometricGraph out;
  if (!(g.window.buffer > 0.0)) {
    out = g;
    out.untrusted_boundary = true;
    out.trimmed = true;
    return out;
  }
  out.kind = g.kind;
  out.dimension = g.dimension;
  out.window = g.window;
  out.fingerprint = g.fingerprint;
  out.dropped_unbounded = g.dropped_unbounded;
  out.trimmed = true;
  std::vector<int> remap(g.vertices.size(), -1);
  std::vector<char> keep_vertex(g.vertices.size(), 0);
  std::vector<char> inside(g.vertices.size(), 0);
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    inside[i] = region.contains(g.vertices[i]);
    if (inside[i] && g.vertex_trusted[i]) keep_vertex[i] = 1;
  }
  std::vector<char> keep_edge(g.edges.size(), 0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& ed = g.edges[e];
    const bool touches = inside[ed.u] || inside[ed.v];
    if (!touches) continue;
    if (!g.edge_trusted[e]) {
      out.trim_warning = true;
      continue;
    }
    keep_edge[e] = 1;
    keep_vertex[ed.u] = keep_vertex[ed.v] = 1;
  }
  // Keep the largest component; ties go to the one with the smallest vertex.
  {
    GeometricGraph kept;
    kept.vertices = g.vertices;
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      if (keep_edge[e]) kept.edges.push_back(g.edges[e]);
    int count = 0;
    const auto label = components(kept, &count);
    std::vector<std::size_t> size(count, 0);
    for (std::size_t i = 0; i < label.size(); ++i) size[label[i]] += keep_vertex[i];
    const int main = static_cast<int>(std::max_element(size.begin(), size.end()) - size.begin());
    for (std::size_t i = 0; i < label.size(); ++i)
      if (keep_vertex[i] && label[i] != main) {
        keep_vertex[i] = 0;
        ++out.detached_vertices;
      }
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      if (keep_edge[e] && !keep_vertex[g.edges[e].u]) keep_edge[e] = 0;
  }
  for (std::size_t i = 0; i < g.vertices.size(); ++i) {
    if (!keep_vertex[i]) continue;
    remap[i] = static_cast<int>(out.vertices.size());
    out.vertices.push_back(g.vertices[i]);
    out.origin.push_back(g.origin[i]);
    out.vertex_trusted.push_back(g.vertex_trusted[i]);
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (!keep_edge[e]) continue;
    out.edges.push_back({remap[g.edges[e].u], remap[g.edges[e].v], g.edges[e].length});
    out.edge_trusted.push_back(1);
  }
  return out;
}

}  // namespace geowalk
