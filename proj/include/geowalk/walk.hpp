#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <vector>

#include "geowalk/annuli.hpp"
#include "geowalk/error.hpp"
#include "geowalk/network.hpp"
#include "geowalk/parallel.hpp"
#include "geowalk/random.hpp"
#include "geowalk/stats.hpp"

namespace geowalk {

/// Vose alias table over a discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      scaled[i] = weights[i] * static_cast<double>(n) / total;
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const auto s = small.back(), l = large.back();
      small.pop_back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) prob_[i] = 1.0;
    for (auto i : small) prob_[i] = 1.0;
  }

  std::size_t size() const { return prob_.size(); }

  std::size_t sample(Rng& rng) const {
    const std::size_t i = static_cast<std::size_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

  /// Probability of outcome i implied by the table.
  double probability(std::size_t i) const {
    const double n = static_cast<double>(prob_.size());
    double p = prob_[i] / n;
    for (std::size_t j = 0; j < prob_.size(); ++j)
      if (j != i && alias_[j] == i) p += (1.0 - prob_[j]) / n;
    return p;
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

/// Random walk driver over a network. Alias tables are built on first visit
/// of each vertex; concurrent walkers may share one instance.
class Walker {
 public:
  explicit Walker(const Network& net) : net_(net), tables_(net.size()), once_(new std::once_flag[net.size()]) {}

  const Network& network() const { return net_; }

  const AliasTable& table(int u) const {
    std::call_once(once_[u], [&] {
      std::vector<double> w;
      for (auto [v, e] : net_.adj[u]) w.push_back(net_.conductance[e]);
      tables_[u] = AliasTable(w);
    });
    return tables_[u];
  }

  /// One step from u: neighbor v with probability C(u, v) / w(u).
  int step(int u, Rng& rng) const { return net_.adj[u][table(u).sample(rng)].first; }

 private:
  const Network& net_;
  mutable std::vector<AliasTable> tables_;
  std::unique_ptr<std::once_flag[]> once_;
};

/// Transition probability P(u, v) = C(u, v) / w(u) (0 if not adjacent).
inline double transition_probability(const Network& net, int u, int v) {
  for (auto [x, e] : net.adj[u])
    if (x == v) return net.conductance[e] / net.weight[u];
  return 0.0;
}

struct StopRule {
  /// Stop after this many steps (0 = no step limit).
  std::uint64_t max_steps = 0;
  /// Stop on leaving B_n about `center` (0 = disabled).
  int exit_n = 0;
  Point center{0.0, 0.0, 0.0};
  /// Stop on the first return to the start.
  bool stop_on_return = false;
};

struct WalkSummary {
  int start = 0;
  std::uint64_t steps = 0;
  std::uint64_t returns = 0;
  /// Largest i <= exit_n such that the walk left B_i (0 when no exit rule).
  int exit_index = 0;
  /// Left B_n before the walk stopped otherwise.
  bool escaped = false;
  std::uint64_t seed = 0;
  int final_vertex = 0;
};

inline void check_walk_start(const Network& net, int start) {
  if (start < 0 || static_cast<std::size_t>(start) >= net.size()) throw UsageError("walk: start vertex out of range");
  if (net.adj[start].empty()) throw UsageError("walk: start vertex is isolated");
}

inline WalkSummary simulate_walk(const Walker& walker, int start, const StopRule& rule, std::uint64_t seed) {
  const Network& net = walker.network();
  check_walk_start(net, start);
  if (rule.max_steps == 0 && rule.exit_n == 0 && !rule.stop_on_return)
    throw UsageError("walk: stop rule never triggers");
  WalkSummary s;
  s.start = start;
  s.seed = seed;
  Rng rng(derive_seed(seed, stream::kWalk));
  const int dim = net.graph.dimension;
  int u = start;
  int far = annulus_index(net.graph.vertices[u], rule.center, dim);
  for (;;) {
    if (rule.max_steps > 0 && s.steps >= rule.max_steps) break;
    u = walker.step(u, rng);
    ++s.steps;
    if (rule.exit_n > 0) {
      const int a = annulus_index(net.graph.vertices[u], rule.center, dim);
      far = std::max(far, a);
      if (a > rule.exit_n) {
        s.escaped = true;
        break;
      }
    }
    if (u == start) {
      ++s.returns;
      if (rule.stop_on_return) break;
    }
  }
  if (rule.exit_n > 0) s.exit_index = std::min(far - 1, rule.exit_n);
  s.final_vertex = u;
  return s;
}

inline WalkSummary simulate_walk(const Network& net, int start, const StopRule& rule, std::uint64_t seed) {
  return simulate_walk(Walker(net), start, rule, seed);
}

/// Fraction of walks from `start` that hit `targets` before returning.
inline ProportionEstimate escape_probability_to(const Network& net, int start, const std::vector<int>& targets,
                                               std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  check_walk_start(net, start);
  if (replicas == 0) throw ParameterError("escape probability: replicas must be > 0");
  std::vector<char> target(net.size(), 0);
  for (int z : targets) target[z] = 1;
  if (target[start]) throw UsageError("escape probability: start is a target");
  const Walker walker(net);
  std::vector<char> hit(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t k) {
    Rng rng(derive_seed(derive_seed(seed, stream::kWalk), k));
    int u = start;
    for (;;) {
      u = walker.step(u, rng);
      if (target[u]) {
        hit[k] = 1;
        return;
      }
      if (u == start) return;
    }
  });
  std::size_t s = 0;
  for (char h : hit) s += h;
  return proportion(s, replicas);
}

/// Escape estimates for a grid of n using common random numbers: each
/// replica walks once from `start` until it returns or leaves B_{max n};
/// it counts as an escape for every n whose box it left before returning.
/// Estimates are therefore nonincreasing in n replica by replica.
inline std::vector<ProportionEstimate> escape_profile(const Network& net, int start, const Point& center,
                                                      const std::vector<int>& ns, std::size_t replicas, std::uint64_t seed,
                                                      unsigned threads = 1) {
  check_walk_start(net, start);
  if (ns.empty()) return {};
  for (int n : ns) check_annulus_range(net.graph, center, 1, n);
  const int nmax = *std::max_element(ns.begin(), ns.end());
  const auto a = annulus_indices(net.graph, center);
  if (a[start] > *std::min_element(ns.begin(), ns.end())) throw RangeError("escape profile: start lies outside B_n");
  const Walker walker(net);
  std::vector<int> reached(replicas, 0);
  parallel_for(replicas, threads, [&](std::size_t k) {
    Rng rng(derive_seed(derive_seed(seed, stream::kWalk), k));
    int u = start, far = a[start];
    for (;;) {
      u = walker.step(u, rng);
      far = std::max(far, a[u]);
      if (far > nmax || u == start) break;
    }
    reached[k] = far;
  });
  std::vector<ProportionEstimate> out;
  for (int n : ns) {
    std::size_t s = 0;
    for (int r : reached) s += r > n;
    out.push_back(proportion(s, replicas));
  }
  return out;
}

inline ProportionEstimate escape_probability(const Network& net, int start, const Point& center, int n,
                                             std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  return escape_profile(net, start, center, {n}, replicas, seed, threads).front();
}

struct RecurrenceRow {
  int n = 0;
  double resistance = 0.0;
  bool infinite = false;
  ProportionEstimate escape;
  /// escape * w(x0) * R_eff, 1 in expectation.
  double identity = 0.0;
  /// |identity - 1| in units of the escape standard error times w R.
  double identity_z = 0.0;
};

struct RecurrenceProfile {
  int start = 0;
  Point center{0.0, 0.0, 0.0};
  std::vector<RecurrenceRow> rows;
};

/// R_eff(x0, complement of B_n) and the escape estimate for each n, with x0
/// the vertex nearest to `center`.
inline RecurrenceProfile recurrence_profile(const Network& net, const Point& center, const std::vector<int>& ns,
                                            std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  RecurrenceProfile out;
  out.center = center;
  out.start = nearest_vertex(net.graph, center);
  std::vector<ProportionEstimate> esc;
  if (replicas > 0) esc = escape_profile(net, out.start, center, ns, replicas, seed, threads);
  for (std::size_t g = 0; g < ns.size(); ++g) {
    RecurrenceRow row;
    row.n = ns[g];
    const auto term = annulus_terminals(net.graph, center, 0, ns[g]);
    if (term.outer.empty()) throw RangeError("recurrence profile: no vertex outside B_n");
    const auto r = effective_resistance(net, {out.start}, term.outer);
    row.resistance = r.value;
    row.infinite = r.infinite;
    if (replicas > 0) {
      row.escape = esc[g];
      const double scale = net.weight[out.start] * r.value;
      row.identity = esc[g].estimate * scale;
      row.identity_z = esc[g].standard_error > 0 ? std::fabs(row.identity - 1.0) / (esc[g].standard_error * scale)
                                                 : (row.identity == 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace geowalk
