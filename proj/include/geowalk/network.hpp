#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geowalk/annuli.hpp"
#include "geowalk/error.hpp"
#include "geowalk/graph.hpp"

namespace geowalk {

enum class ConductanceKind { unit, constant, exponential, power };

/// Conductance as a function of edge length r.
///
/// unit: 1; constant: kappa; exponential: exp(-a r); power: (1 + r)^(-p).
struct ConductanceModel {
  ConductanceKind kind = ConductanceKind::unit;
  double kappa = 1.0;
  double a = 1.0;
  double p = 1.0;

  static ConductanceModel unit() { return {}; }
  static ConductanceModel constant(double k) { return {ConductanceKind::constant, k, 1.0, 1.0}; }
  static ConductanceModel exponential(double rate) { return {ConductanceKind::exponential, 1.0, rate, 1.0}; }
  static ConductanceModel power(double exponent) { return {ConductanceKind::power, 1.0, 1.0, exponent}; }

  void validate() const {
    switch (kind) {
      case ConductanceKind::unit:
        return;
      case ConductanceKind::constant:
        if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ParameterError("constant conductance must be > 0");
        return;
      case ConductanceKind::exponential:
        if (!(a > 0.0) || !std::isfinite(a)) throw ParameterError("exponential conductance rate must be > 0");
        return;
      case ConductanceKind::power:
        if (!(p > 0.0) || !std::isfinite(p)) throw ParameterError("power conductance exponent must be > 0");
        return;
    }
    throw ParameterError("unknown conductance kind");
  }

  /// Whether C decreases with length (constant kinds are not decreasing).
  bool decreasing() const { return kind == ConductanceKind::exponential || kind == ConductanceKind::power; }

  double operator()(double r) const {
    switch (kind) {
      case ConductanceKind::unit:
        return 1.0;
      case ConductanceKind::constant:
        return kappa;
      case ConductanceKind::exponential:
        return std::exp(-a * r);
      case ConductanceKind::power:
        return std::pow(1.0 + r, -p);
    }
    return 1.0;
  }

  /// sup over r >= 0 of C(r).
  double sup() const { return kind == ConductanceKind::constant ? kappa : 1.0; }
  /// inf over r >= 0 of C(r) when positive.
  std::optional<double> inf() const {
    if (decreasing()) return std::nullopt;
    return sup();
  }

  std::string name() const {
    switch (kind) {
      case ConductanceKind::unit:
        return "unit";
      case ConductanceKind::constant:
        return "constant";
      case ConductanceKind::exponential:
        return "exponential";
      case ConductanceKind::power:
        return "power";
    }
    return "?";
  }
};

/// Graph with conductances; w(u) is the sum of conductances at u.
struct Network {
  GeometricGraph graph;
  ConductanceModel model;
  std::vector<double> conductance;
  std::vector<double> weight;
  Adjacency adj;

  std::size_t size() const { return graph.vertices.size(); }
};

/// Builds a network from explicit per-edge conductances.
inline Network make_network(GeometricGraph g, std::vector<double> conductance) {
  if (conductance.size() != g.edges.size()) throw ParameterError("one conductance per edge required");
  Network net;
  for (double c : conductance)
    if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("conductances must be positive and finite");
  net.weight.assign(g.vertices.size(), 0.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    net.weight[g.edges[e].u] += conductance[e];
    net.weight[g.edges[e].v] += conductance[e];
  }
  net.adj = adjacency(g);
  net.graph = std::move(g);
  net.conductance = std::move(conductance);
  return net;
}

inline Network assign_conductances(const GeometricGraph& g, const ConductanceModel& model) {
  model.validate();
  std::vector<double> c(g.edges.size());
  for (std::size_t e = 0; e < c.size(); ++e) {
    c[e] = model(g.edges[e].length);
    if (!(c[e] > 0.0) || !std::isfinite(c[e]))
      throw ParameterError("conductance model gives a non-positive or singular value at length " +
                           std::to_string(g.edges[e].length));
  }
  Network net = make_network(g, std::move(c));
  net.model = model;
  return net;
}

struct ResistanceResult {
  double value = 0.0;
  /// A and Z lie in different components; value is +inf.
  bool infinite = false;
  double current = 0.0;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  /// Potential per vertex (1 on A, 0 on Z, NaN where not computed).
  std::vector<double> potential;
};

struct SolverOptions {
  double tolerance = 1e-12;
  std::size_t max_iterations = 100000;
  /// Largest relative residual accepted when the iteration cap is hit.
  double accept = 1e-10;
};

/// Effective resistance between vertex sets A (potential 1) and Z
/// (potential 0). Solves the grounded Laplacian system on the free vertices
/// of the components touching A with Jacobi-preconditioned conjugate
/// gradients; the resistance is the reciprocal of the current leaving A.
inline ResistanceResult effective_resistance(const Network& net, const std::vector<int>& A, const std::vector<int>& Z,
                                             const SolverOptions& opt = {}) {
  const std::size_t n = net.size();
  if (A.empty() || Z.empty()) throw UsageError("effective_resistance: terminal sets must be nonempty");
  std::vector<signed char> role(n, 0);  // 1 = A, -1 = Z
  for (int a : A) {
    if (a < 0 || static_cast<std::size_t>(a) >= n) throw UsageError("effective_resistance: vertex out of range");
    role[a] = 1;
  }
  for (int z : Z) {
    if (z < 0 || static_cast<std::size_t>(z) >= n) throw UsageError("effective_resistance: vertex out of range");
    if (role[z] == 1) throw UsageError("effective_resistance: A and Z must be disjoint");
    role[z] = -1;
  }
  ResistanceResult out;
  out.potential.assign(n, std::numeric_limits<double>::quiet_NaN());

  // Vertices reachable from A.
  std::vector<char> live(n, 0);
  std::vector<int> stack(A.begin(), A.end());
  for (int a : A) live[a] = 1;
  bool reaches_z = false;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (auto [v, e] : net.adj[u]) {
      if (live[v]) continue;
      live[v] = 1;
      if (role[v] == -1) reaches_z = true;
      stack.push_back(v);
    }
  }
  if (!reaches_z) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }

  std::vector<int> index(n, -1);
  std::vector<int> free_vertices;
  for (std::size_t u = 0; u < n; ++u) {
    if (role[u] == 1) out.potential[u] = 1.0;
    if (role[u] == -1) out.potential[u] = 0.0;
    if (live[u] && role[u] == 0) {
      index[u] = static_cast<int>(free_vertices.size());
      free_vertices.push_back(static_cast<int>(u));
    }
  }
  const std::size_t m = free_vertices.size();
  std::vector<double> b(m, 0.0), diag(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const int u = free_vertices[i];
    diag[i] = net.weight[u];
    for (auto [v, e] : net.adj[u])
      if (role[v] == 1) b[i] += net.conductance[e];
  }
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < m; ++i) {
      const int u = free_vertices[i];
      double s = diag[i] * x[i];
      for (auto [v, e] : net.adj[u])
        if (index[v] >= 0) s -= net.conductance[e] * x[index[v]];
      y[i] = s;
    }
  };
  std::vector<double> x(m, 0.0), r = b, z(m), p(m), q(m);
  double bnorm = 0.0;
  for (double v : b) bnorm += v * v;
  bnorm = std::sqrt(bnorm);
  if (m > 0 && bnorm > 0.0) {
    for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / diag[i];
    p = z;
    double rz = 0.0;
    for (std::size_t i = 0; i < m; ++i) rz += r[i] * z[i];
    double rnorm = bnorm;
    std::size_t it = 0;
    while (rnorm > opt.tolerance * bnorm && it < opt.max_iterations) {
      apply(p, q);
      double pq = 0.0;
      for (std::size_t i = 0; i < m; ++i) pq += p[i] * q[i];
      const double alpha = rz / pq;
      rnorm = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
        rnorm += r[i] * r[i];
      }
      rnorm = std::sqrt(rnorm);
      for (std::size_t i = 0; i < m; ++i) z[i] = r[i] / diag[i];
      double rz_next = 0.0;
      for (std::size_t i = 0; i < m; ++i) rz_next += r[i] * z[i];
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < m; ++i) p[i] = z[i] + beta * p[i];
      ++it;
    }
    // Recompute the true residual rather than trusting the recurrence.
    apply(x, q);
    double true_r = 0.0;
    for (std::size_t i = 0; i < m; ++i) true_r += (b[i] - q[i]) * (b[i] - q[i]);
    out.iterations = it;
    out.relative_residual = std::sqrt(true_r) / bnorm;
    if (out.relative_residual > opt.accept)
      throw NumericError("effective_resistance: conjugate gradients did not converge (relative residual " +
                         std::to_string(out.relative_residual) + ")");
  }
  for (std::size_t i = 0; i < m; ++i) out.potential[free_vertices[i]] = x[i];

  double current = 0.0;
  for (int a : A)
    for (auto [v, e] : net.adj[a]) {
      if (role[v] == 1) continue;
      current += net.conductance[e] * (1.0 - out.potential[v]);
    }
  out.current = current;
  if (!(current > 0.0)) throw NumericError("effective_resistance: no current leaves A");
  out.value = 1.0 / current;
  return out;
}

inline ResistanceResult effective_resistance(const Network& net, int a, int z, const SolverOptions& opt = {}) {
  return effective_resistance(net, std::vector<int>{a}, std::vector<int>{z}, opt);
}

struct AnnulusBound {
  int i0 = 1;
  int imax = 1;
  /// r_i for i = i0..imax.
  std::vector<double> r;
  /// Sum of r_i: lower bound on R_eff(B_{i0}, complement of B_{imax}).
  double bound = 0.0;
  /// Cuts without crossing edges (r_i infinite): the bound is infinite.
  std::vector<int> empty_cuts;
};

/// Cut-and-merge lower bound. Each edge whose endpoint annulus indices are
/// a1 < a2 is split into j = a2 - a1 series pieces of conductance j C(e),
/// one per cut i in [a1, a2 - 1]; merging each cut's inner and outer sides
/// leaves parallel pieces, so 1/r_i = sum over crossing edges of j C(e).
inline AnnulusBound annulus_reduction_bound(const Network& net, const Point& center, int i0, int imax) {
  check_annulus_range(net.graph, center, i0, imax);
  AnnulusBound out;
  out.i0 = i0;
  out.imax = imax;
  std::vector<double> inv(imax - i0 + 1, 0.0);
  const auto a = annulus_indices(net.graph, center);
  for (std::size_t e = 0; e < net.graph.edges.size(); ++e) {
    int a1 = a[net.graph.edges[e].u], a2 = a[net.graph.edges[e].v];
    if (a1 == a2) continue;
    if (a1 > a2) std::swap(a1, a2);
    const double piece = (a2 - a1) * net.conductance[e];
    for (int i = std::max(a1, i0); i <= std::min(a2 - 1, imax); ++i) inv[i - i0] += piece;
  }
  for (int i = i0; i <= imax; ++i) {
    const double c = inv[i - i0];
    if (c > 0.0) {
      out.r.push_back(1.0 / c);
    } else {
      out.r.push_back(std::numeric_limits<double>::infinity());
      out.empty_cuts.push_back(i);
    }
    out.bound += out.r.back();
  }
  return out;
}

/// Network with edge e removed (for monotonicity checks).
inline Network without_edge(const Network& net, std::size_t e) {
  GeometricGraph g = net.graph;
  std::vector<double> c = net.conductance;
  g.edges.erase(g.edges.begin() + static_cast<std::ptrdiff_t>(e));
  if (!g.edge_trusted.empty()) g.edge_trusted.erase(g.edge_trusted.begin() + static_cast<std::ptrdiff_t>(e));
  c.erase(c.begin() + static_cast<std::ptrdiff_t>(e));
  Network out = make_network(std::move(g), std::move(c));
  out.model = net.model;
  return out;
}

}  // namespace geowalk
