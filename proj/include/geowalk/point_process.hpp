#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "geowalk/error.hpp"
#include "geowalk/parallel.hpp"
#include "geowalk/point.hpp"
#include "geowalk/random.hpp"
#include "geowalk/spatial_grid.hpp"
#include "geowalk/stats.hpp"

namespace geowalk {

enum class ProcessKind { poisson, matern_cluster, matern_hardcore };
enum class HardcoreVariant { I, II };

inline double ball_volume(int dim, double r) {
  return dim == 2 ? std::numbers::pi * r * r : 4.0 / 3.0 * std::numbers::pi * r * r * r;
}

/// Parameters of a stationary point process.
///
/// poisson: intensity = lambda.
/// matern_cluster: parents PPP(intensity), each with PPP(daughter_intensity)
///   daughters in B(parent, radius).
/// matern_hardcore: PPP(intensity) thinned at interaction radius `radius`.
struct ProcessDescriptor {
  ProcessKind kind = ProcessKind::poisson;
  double intensity = 1.0;
  double daughter_intensity = 0.0;
  double radius = 0.0;
  HardcoreVariant variant = HardcoreVariant::I;

  static ProcessDescriptor poisson(double lambda) { return {ProcessKind::poisson, lambda, 0.0, 0.0, HardcoreVariant::I}; }
  static ProcessDescriptor matern_cluster(double lambda, double mu, double r) {
    return {ProcessKind::matern_cluster, lambda, mu, r, HardcoreVariant::I};
  }
  static ProcessDescriptor matern_hardcore(double lambda, double r, HardcoreVariant v) {
    return {ProcessKind::matern_hardcore, lambda, 0.0, r, v};
  }

  void validate() const {
    if (!(intensity > 0.0) || !std::isfinite(intensity)) throw ParameterError("process intensity must be > 0");
    if (kind == ProcessKind::matern_cluster) {
      if (!(daughter_intensity > 0.0) || !std::isfinite(daughter_intensity))
        throw ParameterError("cluster daughter intensity must be > 0");
      if (!(radius > 0.0) || !std::isfinite(radius)) throw ParameterError("cluster radius must be > 0");
    }
    if (kind == ProcessKind::matern_hardcore) {
      if (!(radius > 0.0) || !std::isfinite(radius)) throw ParameterError("hardcore radius must be > 0");
      if (variant != HardcoreVariant::I && variant != HardcoreVariant::II)
        throw ParameterError("hardcore variant must be I or II");
    }
  }

  /// Range of dependence of the process (0 for Poisson).
  double interaction_radius() const { return kind == ProcessKind::poisson ? 0.0 : radius; }

  /// Mean number of points per unit volume.
  double mean_intensity(int dim) const {
    switch (kind) {
      case ProcessKind::poisson:
        return intensity;
      case ProcessKind::matern_cluster:
        return intensity * daughter_intensity * ball_volume(dim, radius);
      case ProcessKind::matern_hardcore: {
        const double v = ball_volume(dim, radius);
        if (variant == HardcoreVariant::I) return intensity * std::exp(-intensity * v);
        return (1.0 - std::exp(-intensity * v)) / v;
      }
    }
    return intensity;
  }

  std::string name() const {
    switch (kind) {
      case ProcessKind::poisson:
        return "poisson";
      case ProcessKind::matern_cluster:
        return "matern_cluster";
      case ProcessKind::matern_hardcore:
        return variant == HardcoreVariant::I ? "matern_hardcore_I" : "matern_hardcore_II";
    }
    return "unknown";
  }

  bool operator==(const ProcessDescriptor&) const = default;
};

/// A finite realization of a point process in window plus buffer.
///
/// `ids` identify points within the generating parent process (hardcore
/// thinning) or the sampling order otherwise; `marks` are the thinning
/// marks T_x for hardcore samples and empty otherwise.
struct PointSet {
  Window window;
  std::vector<Point> points;
  ProcessDescriptor process;
  std::uint64_t seed = 0;
  std::vector<double> marks;
  std::vector<std::uint64_t> ids;

  int dimension() const { return window.dimension; }
  std::size_t size() const { return points.size(); }
};

namespace detail {

inline Point uniform_in_extended(Rng& rng, const Window& w) {
  Point p{0.0, 0.0, 0.0};
  for (int k = 0; k < w.dimension; ++k) p[k] = rng.uniform(w.extended_lower(k), w.extended_upper(k));
  return p;
}

inline Point uniform_in_ball(Rng& rng, const Point& c, double r, int dim) {
  for (;;) {
    Point u{0.0, 0.0, 0.0};
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      u[k] = rng.uniform(-1.0, 1.0);
      s += u[k] * u[k];
    }
    if (s >= 1.0) continue;
    Point p{0.0, 0.0, 0.0};
    for (int k = 0; k < dim; ++k) p[k] = c[k] + r * u[k];
    return p;
  }
}

/// Thinning mark of parent point `index`, a pure function of the seed.
inline double hardcore_mark(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(mix64(derive_seed(derive_seed(seed, stream::kMarks), index)) >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Homogeneous Poisson process of intensity lambda on window plus buffer.
inline PointSet sample_ppp(const Window& window, double lambda, std::uint64_t seed) {
  window.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("sample_ppp: intensity must be > 0");
  PointSet out;
  out.window = window;
  out.process = ProcessDescriptor::poisson(lambda);
  out.seed = seed;
  Rng rng(derive_seed(seed, stream::kPoints));
  const std::uint64_t n = rng.poisson(lambda * window.extended_volume());
  out.points.reserve(n);
  out.ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    out.points.push_back(detail::uniform_in_extended(rng, window));
    out.ids.push_back(i);
  }
  return out;
}

/// Matern cluster process. Parents are drawn in the sampled region dilated
/// by R so clusters centred outside still contribute their daughters.
inline PointSet sample_matern_cluster(const Window& window, double lambda, double mu, double radius, std::uint64_t seed) {
  window.validate();
  const auto desc = ProcessDescriptor::matern_cluster(lambda, mu, radius);
  desc.validate();
  const PointSet parents = sample_ppp(window.dilated(radius), lambda, derive_seed(seed, stream::kParents));
  PointSet out;
  out.window = window;
  out.process = desc;
  out.seed = seed;
  const int dim = window.dimension;
  const double mean = mu * ball_volume(dim, radius);
  const std::uint64_t daughters_seed = derive_seed(seed, stream::kDaughters);
  std::uint64_t next_id = 0;
  for (std::size_t j = 0; j < parents.size(); ++j) {
    Rng rng(derive_seed(daughters_seed, j));
    const std::uint64_t k = rng.poisson(mean);
    for (std::uint64_t t = 0; t < k; ++t) {
      const Point p = detail::uniform_in_ball(rng, parents.points[j], radius, dim);
      const std::uint64_t id = next_id++;
      if (window.contains_extended(p)) {
        out.points.push_back(p);
        out.ids.push_back(id);
      }
    }
  }
  return out;
}

/// The parent Poisson process shared by both hardcore variants for a seed.
inline PointSet sample_hardcore_parents(const Window& window, double lambda, double radius, std::uint64_t seed) {
  return sample_ppp(window.dilated(radius), lambda, derive_seed(seed, stream::kParents));
}

/// Matern hardcore thinning of a PPP. The parent process is drawn in the
/// sampled region dilated by R so every retained point sees all competitors.
inline PointSet sample_matern_hardcore(const Window& window, double lambda, double radius, HardcoreVariant variant,
                                       std::uint64_t seed) {
  window.validate();
  const auto desc = ProcessDescriptor::matern_hardcore(lambda, radius, variant);
  desc.validate();
  const PointSet parents = sample_hardcore_parents(window, lambda, radius, seed);
  const int dim = window.dimension;
  SpatialGrid grid(parents.points, dim, radius);
  PointSet out;
  out.window = window;
  out.process = desc;
  out.seed = seed;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const Point& x = parents.points[i];
    if (!window.contains_extended(x)) continue;
    const double tx = detail::hardcore_mark(seed, i);
    bool keep = true;
    grid.for_each_in_ball(x, radius, [&](std::size_t j) {
      if (!keep || j == i) return;
      if (squared_distance(parents.points[j], x, dim) > r2) return;
      if (variant == HardcoreVariant::I) {
        keep = false;
      } else {
        const double ty = detail::hardcore_mark(seed, j);
        if (ty < tx || (ty == tx && j < i)) keep = false;
      }
    });
    if (keep) {
      out.points.push_back(x);
      out.ids.push_back(i);
      out.marks.push_back(tx);
    }
  }
  return out;
}

inline PointSet sample(const ProcessDescriptor& desc, const Window& window, std::uint64_t seed) {
  desc.validate();
  switch (desc.kind) {
    case ProcessKind::poisson:
      return sample_ppp(window, desc.intensity, seed);
    case ProcessKind::matern_cluster:
      return sample_matern_cluster(window, desc.intensity, desc.daughter_intensity, desc.radius, seed);
    case ProcessKind::matern_hardcore:
      return sample_matern_hardcore(window, desc.intensity, desc.radius, desc.variant, seed);
  }
  throw ParameterError("unknown process kind");
}

/// Number of points of `s` in the closed box `region` (buffer ignored).
inline std::size_t count_in(const PointSet& s, const Window& region) {
  std::size_t c = 0;
  for (const auto& p : s.points) c += region.contains(p);
  return c;
}

// ---------------------------------------------------------------------------
// Tail estimators for the void and deviation assumptions.

struct VoidEstimate {
  ProportionEstimate probability;
  double side = 0.0;
  /// -log(max(p, 1/n)) / L^d: the exponential rate implied at this side.
  double c1_hat = 0.0;
};

struct TailEstimate {
  ProportionEstimate probability;
  double threshold = 0.0;
  Window region;
};

namespace detail {

inline void require_replicas(std::size_t n) {
  if (n < 100) throw ParameterError("estimators need at least 100 replicas");
}

/// Replica k samples desc in `region` (no buffer; samplers dilate for their
/// own interaction range) with seed derive_seed(seed, k) and reports the
/// number of points inside the region.
inline std::vector<std::size_t> replica_counts(const ProcessDescriptor& desc, const Window& region, std::size_t replicas,
                                               std::uint64_t seed, unsigned threads) {
  std::vector<std::size_t> counts(replicas, 0);
  Window w = region;
  w.buffer = 0.0;
  parallel_for(replicas, threads, [&](std::size_t k) {
    const PointSet s = sample(desc, w, derive_seed(seed, k));
    counts[k] = count_in(s, w);
  });
  return counts;
}

}  // namespace detail

/// Fraction of replicas with no point in [0, L]^d.
inline VoidEstimate empirical_void_probability(const ProcessDescriptor& desc, int dim, double side, std::size_t replicas,
                                               std::uint64_t seed, unsigned threads = 1) {
  desc.validate();
  detail::require_replicas(replicas);
  if (!(side > 0.0)) throw ParameterError("void probability: side must be > 0");
  const Window region = Window::cube(dim, 0.0, side);
  region.validate();
  const auto counts = detail::replica_counts(desc, region, replicas, seed, threads);
  std::size_t empty = 0;
  for (auto c : counts) empty += (c == 0);
  VoidEstimate out;
  out.probability = proportion(empty, replicas);
  out.side = side;
  const double p = std::max(out.probability.estimate, 1.0 / static_cast<double>(replicas));
  out.c1_hat = -std::log(p) / std::pow(side, dim);
  return out;
}

/// Fraction of replicas with at least `threshold` points in `region`.
inline TailEstimate empirical_count_tail(const ProcessDescriptor& desc, const Window& region, double threshold,
                                         std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  desc.validate();
  region.validate();
  detail::require_replicas(replicas);
  if (!(threshold >= 0.0)) throw ParameterError("count tail: threshold must be >= 0");
  const auto counts = detail::replica_counts(desc, region, replicas, seed, threads);
  std::size_t hits = 0;
  for (auto c : counts) hits += (static_cast<double>(c) >= threshold);
  TailEstimate out;
  out.probability = proportion(hits, replicas);
  out.threshold = threshold;
  out.region = region;
  return out;
}

/// Side of the calibration cube holding about nine points on average.
inline double calibration_side(const ProcessDescriptor& desc, int dim) {
  return std::pow(9.0 / desc.mean_intensity(dim), 1.0 / dim);
}

/// Estimate of the void constant c1 at side `side` (calibration side if 0).
inline VoidEstimate estimate_c1(const ProcessDescriptor& desc, int dim, std::size_t replicas, std::uint64_t seed,
                                double side = 0.0, unsigned threads = 1) {
  if (!(side > 0.0)) side = calibration_side(desc, dim);
  return empirical_void_probability(desc, dim, side, replicas, seed, threads);
}

struct DeviationFit {
  /// Threshold density in P[#(rect) >= c2 * area] <= exp(-c3 * area).
  double c2 = 0.0;
  /// Fitted exponential rate; NaN when fewer than two grid cells had hits.
  double c3 = std::nan("");
  double r_squared = 0.0;
  std::vector<double> areas;
  std::vector<TailEstimate> tails;
};

/// Deviation constants in d = 2: c2 is set to twice the mean intensity and
/// c3 is the negated slope of log P against rectangle area over the grid.
inline DeviationFit estimate_c2_c3(const ProcessDescriptor& desc, const std::vector<std::pair<double, double>>& rects,
                                   std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  desc.validate();
  DeviationFit fit;
  fit.c2 = 2.0 * desc.mean_intensity(2);
  std::vector<double> xs, ys;
  for (std::size_t g = 0; g < rects.size(); ++g) {
    Window region;
    region.dimension = 2;
    region.lower = {0.0, 0.0, 0.0};
    region.sides = {rects[g].first, rects[g].second, 0.0};
    const double area = rects[g].first * rects[g].second;
    auto tail = empirical_count_tail(desc, region, fit.c2 * area, replicas, derive_seed(seed, g), threads);
    fit.areas.push_back(area);
    if (tail.probability.successes > 0) {
      xs.push_back(area);
      ys.push_back(std::log(tail.probability.estimate));
    }
    fit.tails.push_back(tail);
  }
  if (xs.size() >= 2) {
    const auto lf = linear_fit(xs, ys);
    fit.c3 = -lf.slope;
    fit.r_squared = lf.r_squared;
  }
  return fit;
}

struct CountTailFit {
  /// max over the grid of (log P[# >= m] + m) / L^d; grid cells without
  /// hits are skipped.
  double c4 = std::nan("");
  std::vector<double> thresholds;
  std::vector<TailEstimate> tails;
};

/// Estimate of c4 in P[#([0,L]^d) >= m] <= exp(c4 L^d - m). For a PPP of
/// intensity lambda the Chernoff bound gives c4 = lambda (e - 1).
inline CountTailFit estimate_c4(const ProcessDescriptor& desc, int dim, double side, const std::vector<double>& thresholds,
                                std::size_t replicas, std::uint64_t seed, unsigned threads = 1) {
  desc.validate();
  CountTailFit fit;
  const Window region = Window::cube(dim, 0.0, side);
  const double vol = std::pow(side, dim);
  double best = -INFINITY;
  for (std::size_t g = 0; g < thresholds.size(); ++g) {
    auto tail = empirical_count_tail(desc, region, thresholds[g], replicas, derive_seed(seed, g), threads);
    if (tail.probability.successes > 0)
      best = std::max(best, (std::log(tail.probability.estimate) + thresholds[g]) / vol);
    fit.thresholds.push_back(thresholds[g]);
    fit.tails.push_back(tail);
  }
  if (std::isfinite(best)) fit.c4 = best;
  return fit;
}

/// Theoretical c4 for a Poisson process, lambda (e - 1).
inline double poisson_c4(double lambda) { return lambda * (std::numbers::e - 1.0); }

}  // namespace geowalk
