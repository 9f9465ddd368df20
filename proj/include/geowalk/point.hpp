#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "geowalk/error.hpp"

namespace geowalk {

/// Coordinates in R^d, d in {2, 3}. Unused trailing coordinates are zero.
using Point = std::array<double, 3>;

inline double squared_distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

inline double distance(const Point& a, const Point& b, int dim) { return std::sqrt(squared_distance(a, b, dim)); }

inline double sup_distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s = std::max(s, std::fabs(a[k] - b[k]));
  return s;
}

/// Axis-aligned sampling window with a collar of width `buffer` around it.
struct Window {
  int dimension = 2;
  Point lower{0.0, 0.0, 0.0};
  Point sides{1.0, 1.0, 0.0};
  double buffer = 0.0;

  static Window cube(int dim, double lo, double side, double buffer = 0.0) {
    Window w;
    w.dimension = dim;
    for (int k = 0; k < dim; ++k) {
      w.lower[k] = lo;
      w.sides[k] = side;
    }
    w.buffer = buffer;
    return w;
  }

  void validate() const {
    if (dimension != 2 && dimension != 3) throw ParameterError("window dimension must be 2 or 3");
    for (int k = 0; k < dimension; ++k) {
      if (!(sides[k] > 0.0) || !std::isfinite(sides[k])) throw ParameterError("window side lengths must be positive");
      if (!std::isfinite(lower[k])) throw ParameterError("window lower corner must be finite");
    }
    if (!(buffer >= 0.0) || !std::isfinite(buffer)) throw ParameterError("window buffer must be >= 0");
  }

  double upper(int k) const { return lower[k] + sides[k]; }
  double extended_lower(int k) const { return lower[k] - buffer; }
  double extended_upper(int k) const { return lower[k] + sides[k] + buffer; }

  double volume() const {
    double v = 1.0;
    for (int k = 0; k < dimension; ++k) v *= sides[k];
    return v;
  }

  double extended_volume() const {
    double v = 1.0;
    for (int k = 0; k < dimension; ++k) v *= sides[k] + 2.0 * buffer;
    return v;
  }

  /// Closed analysis region [lower, lower + sides].
  bool contains(const Point& p) const {
    for (int k = 0; k < dimension; ++k)
      if (p[k] < lower[k] || p[k] > upper(k)) return false;
    return true;
  }

  /// Closed sampled region, window dilated by the buffer.
  bool contains_extended(const Point& p) const {
    for (int k = 0; k < dimension; ++k)
      if (p[k] < extended_lower(k) || p[k] > extended_upper(k)) return false;
    return true;
  }

  /// Whether the closed Euclidean ball B(c, r) lies in the sampled region.
  bool extended_contains_ball(const Point& c, double r) const {
    for (int k = 0; k < dimension; ++k)
      if (c[k] - r < extended_lower(k) || c[k] + r > extended_upper(k)) return false;
    return true;
  }

  /// Window whose extended region is this one's extended region grown by r.
  Window dilated(double r) const {
    Window w = *this;
    w.buffer = buffer + r;
    return w;
  }

  /// Window with no buffer covering this window's extended region.
  Window extended_as_window() const {
    Window w = *this;
    for (int k = 0; k < dimension; ++k) {
      w.lower[k] = lower[k] - buffer;
      w.sides[k] = sides[k] + 2.0 * buffer;
    }
    w.buffer = 0.0;
    return w;
  }

  bool operator==(const Window&) const = default;
};

}  // namespace geowalk
