#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "geowalk/point.hpp"

namespace geowalk {

/// Uniform bucket grid over a point cloud for box and radius queries.
class SpatialGrid {
 public:
  SpatialGrid() = default;

  SpatialGrid(std::span<const Point> points, int dim, double cell_size = 0.0) : points_(points), dim_(dim) {
    for (int k = 0; k < 3; ++k) {
      lo_[k] = 0.0;
      counts_[k] = 1;
    }
    if (points.empty()) {
      cell_ = 1.0;
      offsets_.assign(2, 0);
      return;
    }
    Point hi{};
    for (int k = 0; k < dim; ++k) {
      lo_[k] = hi[k] = points[0][k];
    }
    for (const auto& p : points) {
      for (int k = 0; k < dim; ++k) {
        lo_[k] = std::min(lo_[k], p[k]);
        hi[k] = std::max(hi[k], p[k]);
      }
    }
    if (!(cell_size > 0.0)) {
      double volume = 1.0;
      for (int k = 0; k < dim; ++k) volume *= std::max(hi[k] - lo_[k], 1e-12);
      cell_size = std::pow(2.0 * volume / static_cast<double>(points.size()), 1.0 / dim);
    }
    cell_ = cell_size;
    // Small requested cells only cost memory; cap the cell count near 8n.
    const double max_cells = 8.0 * static_cast<double>(points.size()) + 64.0;
    std::size_t total = 1;
    for (;;) {
      double cells = 1.0;
      for (int k = 0; k < dim; ++k) cells *= std::floor((hi[k] - lo_[k]) / cell_) + 1.0;
      if (cells <= max_cells) break;
      cell_ *= 2.0;
    }
    for (int k = 0; k < dim; ++k) {
      const double span = hi[k] - lo_[k];
      counts_[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(span / cell_) + 1, 1, 1 << 20);
      total *= static_cast<std::size_t>(counts_[k]);
    }
    offsets_.assign(total + 1, 0);
    std::vector<std::size_t> cell_of(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      cell_of[i] = flat(cell_coords(points[i]));
      ++offsets_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) offsets_[c + 1] += offsets_[c];
    items_.resize(points.size());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }

  /// Calls fn(index) for every point in the closed box [lo, hi].
  template <class Fn>
  void for_each_in_box(const Point& lo, const Point& hi, Fn&& fn) const {
    if (points_.empty()) return;
    std::array<std::int64_t, 3> a{0, 0, 0}, b{0, 0, 0};
    for (int k = 0; k < dim_; ++k) {
      a[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((lo[k] - lo_[k]) / cell_)), 0, counts_[k] - 1);
      b[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((hi[k] - lo_[k]) / cell_)), 0, counts_[k] - 1);
      if (hi[k] < lo_[k] || lo[k] > lo_[k] + cell_ * static_cast<double>(counts_[k])) return;
    }
    for (std::int64_t z = a[2]; z <= b[2]; ++z) {
      for (std::int64_t y = a[1]; y <= b[1]; ++y) {
        for (std::int64_t x = a[0]; x <= b[0]; ++x) {
          const std::size_t c = flat({x, y, z});
          for (std::size_t t = offsets_[c]; t < offsets_[c + 1]; ++t) {
            const std::uint32_t i = items_[t];
            const Point& p = points_[i];
            bool inside = true;
            for (int k = 0; k < dim_; ++k)
              if (p[k] < lo[k] || p[k] > hi[k]) inside = false;
            if (inside) fn(static_cast<std::size_t>(i));
          }
        }
      }
    }
  }

  /// Calls fn(index) for every point with ||p - c|| <= r.
  template <class Fn>
  void for_each_in_ball(const Point& c, double r, Fn&& fn) const {
    Point lo{}, hi{};
    for (int k = 0; k < dim_; ++k) {
      lo[k] = c[k] - r;
      hi[k] = c[k] + r;
    }
    const double r2 = r * r;
    for_each_in_box(lo, hi, [&](std::size_t i) {
      if (squared_distance(points_[i], c, dim_) <= r2) fn(i);
    });
  }

  /// Index of the point nearest to q (ties to smaller index); -1 if empty.
  std::int64_t nearest(const Point& q) const {
    if (points_.empty()) return -1;
    double r = cell_;
    for (;;) {
      std::int64_t best = -1;
      double best_d = 0.0;
      for_each_in_ball(q, r, [&](std::size_t i) {
        const double d = squared_distance(points_[i], q, dim_);
        if (best < 0 || d < best_d || (d == best_d && static_cast<std::int64_t>(i) < best)) {
          best = static_cast<std::int64_t>(i);
          best_d = d;
        }
      });
      if (best >= 0) return best;
      r *= 2.0;
      if (r > 1e300) return -1;
    }
  }

  double cell_size() const { return cell_; }

 private:
  std::array<std::int64_t, 3> cell_coords(const Point& p) const {
    std::array<std::int64_t, 3> c{0, 0, 0};
    for (int k = 0; k < dim_; ++k)
      c[k] = std::clamp<std::int64_t>(static_cast<std::int64_t>((p[k] - lo_[k]) / cell_), 0, counts_[k] - 1);
    return c;
  }

  std::size_t flat(const std::array<std::int64_t, 3>& c) const {
    return static_cast<std::size_t>((c[2] * counts_[1] + c[1]) * counts_[0] + c[0]);
  }

  std::span<const Point> points_;
  int dim_ = 2;
  Point lo_{};
  double cell_ = 1.0;
  std::array<std::int64_t, 3> counts_{1, 1, 1};
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> items_;
};

}  // namespace geowalk
