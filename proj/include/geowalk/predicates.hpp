#pragma once

#include <gmpxx.h>

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include "geowalk/point.hpp"

/// Filtered exact geometric predicates.
///
/// Each predicate first evaluates in double precision together with a
/// forward error bound on the result; only when the sign is not certified
/// it is recomputed exactly over the rationals (every double is an exact
/// rational, so the fallback is exact for any finite input).
namespace geowalk::predicates {

namespace detail {

template <class T, std::size_t N>
using Matrix = std::array<std::array<T, N>, N>;

template <class T, std::size_t N>
T det(const Matrix<T, N>& m) {
  if constexpr (N == 1) {
    return m[0][0];
  } else if constexpr (N == 2) {
    return T(m[0][0] * m[1][1] - m[0][1] * m[1][0]);
  } else {
    T acc = 0;
    for (std::size_t c = 0; c < N; ++c) {
      Matrix<T, N - 1> minor{};
      for (std::size_t r = 1; r < N; ++r) {
        std::size_t cc = 0;
        for (std::size_t k = 0; k < N; ++k) {
          if (k == c) continue;
          minor[r - 1][cc++] = m[r][k];
        }
      }
      T term = m[0][c] * det<T, N - 1>(minor);
      if (c % 2 == 0)
        acc += term;
      else
        acc -= term;
    }
    return acc;
  }
}

/// Permanent of |m|, the magnitude scale used by the error bounds.
template <std::size_t N>
double permanent_abs(const Matrix<double, N>& m) {
  if constexpr (N == 1) {
    return std::fabs(m[0][0]);
  } else {
    double acc = 0.0;
    for (std::size_t c = 0; c < N; ++c) {
      Matrix<double, N - 1> minor{};
      for (std::size_t r = 1; r < N; ++r) {
        std::size_t cc = 0;
        for (std::size_t k = 0; k < N; ++k) {
          if (k == c) continue;
          minor[r - 1][cc++] = m[r][k];
        }
      }
      acc += std::fabs(m[0][c]) * permanent_abs<N - 1>(minor);
    }
    return acc;
  }
}

template <std::size_t N>
double row_norm_product(const Matrix<double, N>& m) {
  double prod = 1.0;
  for (const auto& row : m) {
    double s = 0.0;
    for (double x : row) s += x * x;
    prod *= std::sqrt(s);
  }
  return prod > 0.0 ? prod : 1.0;
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }
inline int sign_of(const mpq_class& v) { return sgn(v); }

// Relative error constants for the double evaluation (Shewchuk's A-bounds),
// inflated by 4 to leave slack for the generic evaluation order.
constexpr double kEps = 0x1.0p-53;
constexpr double kOrient2Bound = 4.0 * (3.0 + 16.0 * kEps) * kEps;
constexpr double kOrient3Bound = 4.0 * (7.0 + 56.0 * kEps) * kEps;
constexpr double kInCircleBound = 4.0 * (10.0 + 96.0 * kEps) * kEps;
constexpr double kInSphereBound = 4.0 * (16.0 + 224.0 * kEps) * kEps;

}  // namespace detail

/// Sign of det[q1 - q0, ..., qD - q0]; +1 for a positively oriented simplex.
template <int D>
int orient(const std::array<const Point*, D + 1>& q) {
  static_assert(D == 2 || D == 3);
  detail::Matrix<double, D> m{};
  for (int r = 0; r < D; ++r)
    for (int k = 0; k < D; ++k) m[r][k] = (*q[r + 1])[k] - (*q[0])[k];
  const double value = detail::det<double, D>(m);
  const double bound = (D == 2 ? detail::kOrient2Bound : detail::kOrient3Bound) * detail::permanent_abs<D>(m);
  if (value > bound || -value > bound) return detail::sign_of(value);
  detail::Matrix<mpq_class, D> e{};
  for (int r = 0; r < D; ++r)
    for (int k = 0; k < D; ++k) e[r][k] = mpq_class((*q[r + 1])[k]) - mpq_class((*q[0])[k]);
  return detail::sign_of(detail::det<mpq_class, D>(e));
}

inline int orient2(const Point& a, const Point& b, const Point& c) { return orient<2>({&a, &b, &c}); }
inline int orient3(const Point& a, const Point& b, const Point& c, const Point& d) {
  return orient<3>({&a, &b, &c, &d});
}

/// Sign of the lifted determinant det[(q_k - p, |q_k - p|^2)]_{k=0..D} with
/// p = q[D+1]. For a positively oriented simplex q0..qD the query p lies
/// strictly inside the circumsphere iff (D == 2 ? +1 : -1) times this sign
/// is positive.
template <int D>
int lifted(const std::array<const Point*, D + 2>& q) {
  static_assert(D == 2 || D == 3);
  const Point& p = *q[D + 1];
  detail::Matrix<double, D + 1> m{};
  for (int r = 0; r <= D; ++r) {
    double lift = 0.0;
    for (int k = 0; k < D; ++k) {
      m[r][k] = (*q[r])[k] - p[k];
      lift += m[r][k] * m[r][k];
    }
    m[r][D] = lift;
  }
  const double value = detail::det<double, D + 1>(m);
  const double bound = (D == 2 ? detail::kInCircleBound : detail::kInSphereBound) * detail::permanent_abs<D + 1>(m);
  if (value > bound || -value > bound) return detail::sign_of(value);
  detail::Matrix<mpq_class, D + 1> e{};
  for (int r = 0; r <= D; ++r) {
    mpq_class lift = 0;
    for (int k = 0; k < D; ++k) {
      e[r][k] = mpq_class((*q[r])[k]) - mpq_class(p[k]);
      lift += e[r][k] * e[r][k];
    }
    e[r][D] = lift;
  }
  return detail::sign_of(detail::det<mpq_class, D + 1>(e));
}

/// Sign of the lifted determinant after lifting each point q_k by an
/// infinitesimal eps^(rank), where points with larger `ids` receive the
/// dominant perturbation. Never zero for distinct ids unless all D+2 points
/// are affinely dependent in every D+1 subset.
template <int D>
int lifted_perturbed(const std::array<const Point*, D + 2>& q, const std::array<long long, D + 2>& ids) {
  const int s = lifted<D>(q);
  if (s != 0) return s;
  // Expand along the lift column: the cofactor of row k is
  // (-1)^k * orient(rows without k). The first nonzero cofactor in
  // perturbation order decides the sign.
  std::array<int, D + 2> order{};
  for (int k = 0; k < D + 2; ++k) order[k] = k;
  for (int a = 1; a < D + 2; ++a)
    for (int b = a; b > 0 && ids[order[b]] > ids[order[b - 1]]; --b) std::swap(order[b], order[b - 1]);
  for (int t = 0; t < D + 2; ++t) {
    const int k = order[t];
    std::array<const Point*, D + 1> rest{};
    int c = 0;
    for (int j = 0; j < D + 2; ++j)
      if (j != k) rest[c++] = q[j];
    const int o = orient<D>(rest);
    if (o != 0) return (k % 2 == 0) ? o : -o;
  }
  return 0;
}

/// Whether p lies strictly inside the circumsphere of the positively
/// oriented simplex s under the index perturbation (ties broken so that the
/// overall configuration behaves as if in general position).
template <int D>
bool in_sphere(const std::array<const Point*, D + 1>& s, const std::array<long long, D + 1>& s_ids, const Point& p,
               long long p_id) {
  std::array<const Point*, D + 2> q{};
  std::array<long long, D + 2> ids{};
  for (int k = 0; k <= D; ++k) {
    q[k] = s[k];
    ids[k] = s_ids[k];
  }
  q[D + 1] = &p;
  ids[D + 1] = p_id;
  const int sign = lifted_perturbed<D>(q, ids);
  return (D == 2 ? sign : -sign) > 0;
}

/// Unperturbed in-sphere sign: +1 strictly inside, 0 on the sphere, -1 outside.
template <int D>
int in_sphere_exact(const std::array<const Point*, D + 1>& s, const Point& p) {
  std::array<const Point*, D + 2> q{};
  for (int k = 0; k <= D; ++k) q[k] = s[k];
  q[D + 1] = &p;
  const int sign = lifted<D>(q);
  const int o = orient<D>(s);
  return (D == 2 ? sign : -sign) * o;
}

/// Sign of (w - u) . (w - v): negative iff w lies strictly inside the open
/// ball with diameter [u, v], zero on its boundary sphere.
inline int diametral(const Point& u, const Point& v, const Point& w, int dim) {
  double value = 0.0;
  double scale = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double a = w[k] - u[k];
    const double b = w[k] - v[k];
    value += a * b;
    scale += std::fabs(a * b);
  }
  const double bound = 8.0 * detail::kEps * scale;
  if (value > bound || -value > bound) return detail::sign_of(value);
  mpq_class exact = 0;
  for (int k = 0; k < dim; ++k) exact += (mpq_class(w[k]) - mpq_class(u[k])) * (mpq_class(w[k]) - mpq_class(v[k]));
  return sgn(exact);
}

/// |det| over the product of row norms (Hadamard bound) of the orientation
/// matrix: a scale-free measure in [0, 1] of how close the D+1 points are to
/// a common hyperplane, 0 when degenerate.
template <int D>
double orient_magnitude(const std::array<const Point*, D + 1>& q) {
  detail::Matrix<double, D> m{};
  for (int r = 0; r < D; ++r)
    for (int k = 0; k < D; ++k) m[r][k] = (*q[r + 1])[k] - (*q[0])[k];
  return std::fabs(detail::det<double, D>(m)) / detail::row_norm_product<D>(m);
}

/// Same measure for the lifted determinant: closeness to a common sphere.
template <int D>
double lifted_magnitude(const std::array<const Point*, D + 2>& q) {
  const Point& p = *q[D + 1];
  detail::Matrix<double, D + 1> m{};
  for (int r = 0; r <= D; ++r) {
    double lift = 0.0;
    for (int k = 0; k < D; ++k) {
      m[r][k] = (*q[r])[k] - p[k];
      lift += m[r][k] * m[r][k];
    }
    m[r][D] = lift;
  }
  return std::fabs(detail::det<double, D + 1>(m)) / detail::row_norm_product<D + 1>(m);
}

/// Exact comparison of |a|^2 against |b|^2 for difference vectors given by
/// endpoints; returns sign(|a1 - a0|^2 - |b1 - b0|^2).
inline int compare_squared_lengths(const Point& a0, const Point& a1, const Point& b0, const Point& b1, int dim) {
  double la = 0.0, lb = 0.0;
  for (int k = 0; k < dim; ++k) {
    la += (a1[k] - a0[k]) * (a1[k] - a0[k]);
    lb += (b1[k] - b0[k]) * (b1[k] - b0[k]);
  }
  const double diff = la - lb;
  const double bound = 8.0 * detail::kEps * (la + lb);
  if (diff > bound || -diff > bound) return detail::sign_of(diff);
  mpq_class ea = 0, eb = 0;
  for (int k = 0; k < dim; ++k) {
    const mpq_class da = mpq_class(a1[k]) - mpq_class(a0[k]);
    const mpq_class db = mpq_class(b1[k]) - mpq_class(b0[k]);
    ea += da * da;
    eb += db * db;
  }
  return sgn(mpq_class(ea - eb));
}

}  // namespace geowalk::predicates
