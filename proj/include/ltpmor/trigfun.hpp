#pragma once

/// \file trigfun.hpp
/// T-periodic trigonometric polynomials with vector or matrix coefficients.
///
/// A function f(t) = sum_{k=-M}^{M} C_k exp(i w k t), w = 2 pi / T, is stored
/// as the dense two-sided coefficient array C_{-M}, ..., C_{M}. Zero padding is
/// explicit; the depth M is the largest stored index, not necessarily the
/// largest nonzero one.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ltpmor/errors.hpp"

namespace ltpmor {

using cplx = std::complex<double>;
using Index = Eigen::Index;
using VectorXc = Eigen::VectorXcd;
using MatrixXc = Eigen::MatrixXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Relative tail tolerance applied when callers trim products.
inline constexpr double kDefaultTrimTol = 1e-12;

template <class Coeff>
class TrigPoly {
 public:
  using coeff_type = Coeff;

  TrigPoly() = default;

  /// Zero function with the given shape.
  TrigPoly(double period, int depth, Index rows, Index cols = 1)
      : period_(period), depth_(depth), rows_(rows), cols_(cols) {
    if (!(period > 0.0) || !std::isfinite(period))
      throw InvalidArgument("trig polynomial period must be positive and finite");
    if (depth < 0) throw InvalidArgument("trig polynomial depth must be >= 0");
    if (rows <= 0 || cols <= 0)
      throw InvalidArgument("trig polynomial dimensions must be positive");
    coeffs_.assign(2 * static_cast<std::size_t>(depth) + 1, zero_coeff());
  }

  static TrigPoly constant(double period, const Coeff& value) {
    TrigPoly f(period, 0, value.rows(), value.cols());
    f[0] = value;
    return f;
  }

  double period() const noexcept { return period_; }
  double omega() const noexcept { return 2.0 * std::numbers::pi / period_; }
  int depth() const noexcept { return depth_; }
  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  bool empty() const noexcept { return coeffs_.empty(); }

  Coeff& operator[](int k) { return coeffs_[static_cast<std::size_t>(k + depth_)]; }
  const Coeff& operator[](int k) const {
    return coeffs_[static_cast<std::size_t>(k + depth_)];
  }

  /// Coefficient k, or zero when |k| exceeds the stored depth.
  Coeff at(int k) const {
    if (k < -depth_ || k > depth_) return zero_coeff();
    return (*this)[k];
  }

  Coeff zero_coeff() const { return Coeff::Zero(rows_, cols_); }

  /// sum_k C_k exp(i w k t)
  Coeff operator()(double t) const {
    Coeff out = zero_coeff();
    const double w = omega();
    for (int k = -depth_; k <= depth_; ++k)
      out += (*this)[k] * std::polar(1.0, w * k * t);
    return out;
  }

  /// Sum of squared coefficient norms (Parseval for the L2 inner product).
  double squared_norm() const {
    double acc = 0.0;
    for (const auto& c : coeffs_) acc += c.squaredNorm();
    return acc;
  }

  /// Same function with depth raised to at least `depth` (zero filled).
  TrigPoly padded(int depth) const {
    if (depth <= depth_) return *this;
    TrigPoly out(period_, depth, rows_, cols_);
    for (int k = -depth_; k <= depth_; ++k) out[k] = (*this)[k];
    return out;
  }

 private:
  double period_ = 1.0;
  int depth_ = 0;
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Coeff> coeffs_;
};

using TrigVecFn = TrigPoly<VectorXc>;
using TrigMatFn = TrigPoly<MatrixXc>;

namespace detail {

template <class A, class B>
void require_same_period(const TrigPoly<A>& a, const TrigPoly<B>& b) {
  if (a.period() != b.period())
    throw PeriodMismatch("trig polynomials have different periods (" +
                         std::to_string(a.period()) + " vs " +
                         std::to_string(b.period()) + ")");
}

}  // namespace detail

/// Scalar trig polynomial as a one-dimensional vector function.
inline TrigVecFn scalar_trig(double period, const std::vector<std::pair<int, cplx>>& terms) {
  int depth = 0;
  for (const auto& [k, _] : terms) depth = std::max(depth, std::abs(k));
  TrigVecFn f(period, depth, 1);
  for (const auto& [k, a] : terms) f[k](0) += a;
  return f;
}

template <class C>
TrigPoly<C> operator+(const TrigPoly<C>& a, const TrigPoly<C>& b) {
  detail::require_same_period(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("trig polynomial sum: shape mismatch");
  TrigPoly<C> out = a.padded(b.depth());
  for (int k = -b.depth(); k <= b.depth(); ++k) out[k] += b[k];
  return out;
}

template <class C>
TrigPoly<C> operator-(const TrigPoly<C>& a, const TrigPoly<C>& b) {
  detail::require_same_period(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("trig polynomial difference: shape mismatch");
  TrigPoly<C> out = a.padded(b.depth());
  for (int k = -b.depth(); k <= b.depth(); ++k) out[k] -= b[k];
  return out;
}

template <class C>
TrigPoly<C> operator*(cplx alpha, TrigPoly<C> f) {
  for (int k = -f.depth(); k <= f.depth(); ++k) f[k] *= alpha;
  return f;
}

/// <w, v> = (1/T) int_0^T w(t)^* v(t) dt = sum_k W_k^* V_k.
inline cplx inner_product(const TrigVecFn& w, const TrigVecFn& v) {
  detail::require_same_period(w, v);
  if (w.rows() != v.rows())
    throw DimensionMismatch("inner product: dimension mismatch (" +
                            std::to_string(w.rows()) + " vs " +
                            std::to_string(v.rows()) + ")");
  const int m = std::min(w.depth(), v.depth());
  cplx acc{0.0, 0.0};
  for (int k = -m; k <= m; ++k) acc += w[k].dot(v[k]);
  return acc;
}

inline double l2_norm(const TrigVecFn& v) { return std::sqrt(v.squared_norm()); }

/// Pointwise product a(t) b(t); coefficients are the discrete convolution.
template <class C>
TrigPoly<C> multiply(const TrigMatFn& a, const TrigPoly<C>& b) {
  detail::require_same_period(a, b);
  if (a.cols() != b.rows())
    throw DimensionMismatch("multiply: inner dimensions differ (" +
                            std::to_string(a.cols()) + " vs " +
                            std::to_string(b.rows()) + ")");
  TrigPoly<C> out(a.period(), a.depth() + b.depth(), a.rows(), b.cols());
  for (int m = -a.depth(); m <= a.depth(); ++m) {
    if (a[m].isZero(0.0)) continue;
    for (int j = -b.depth(); j <= b.depth(); ++j) out[m + j].noalias() += a[m] * b[j];
  }
  return out;
}

/// Pointwise conjugate transpose: coefficients (M^H)_k = (M_{-k})^*.
inline TrigMatFn adjoint(const TrigMatFn& m) {
  TrigMatFn out(m.period(), m.depth(), m.cols(), m.rows());
  for (int k = -m.depth(); k <= m.depth(); ++k) out[k] = m[-k].adjoint();
  return out;
}

/// Scalar function q(t)^* v(t), returned with dimension one.
inline TrigVecFn pointwise_dot(const TrigVecFn& q, const TrigVecFn& v) {
  detail::require_same_period(q, v);
  if (q.rows() != v.rows()) throw DimensionMismatch("pointwise_dot: dimension mismatch");
  // (q^* v)_k = sum_m Q_m^H V_{k+m}
  TrigVecFn out(q.period(), q.depth() + v.depth(), 1);
  for (int m = -q.depth(); m <= q.depth(); ++m)
    for (int j = -v.depth(); j <= v.depth(); ++j) out[j - m](0) += q[m].dot(v[j]);
  return out;
}

/// v(t) s(t) for a scalar trig polynomial s.
inline TrigVecFn scale(const TrigVecFn& v, const TrigVecFn& s) {
  detail::require_same_period(v, s);
  if (s.rows() != 1) throw DimensionMismatch("scale: multiplier must be scalar");
  TrigVecFn out(v.period(), v.depth() + s.depth(), v.rows());
  for (int m = -s.depth(); m <= s.depth(); ++m) {
    const cplx a = s[m](0);
    if (a == cplx{}) continue;
    for (int j = -v.depth(); j <= v.depth(); ++j) out[m + j] += a * v[j];
  }
  return out;
}

template <class C>
TrigPoly<C> differentiate(TrigPoly<C> f) {
  const double w = f.omega();
  for (int k = -f.depth(); k <= f.depth(); ++k) f[k] *= kI * (w * k);
  return f;
}

/// f(t) exp(-i w l t): coefficient k moves to k - l.
template <class C>
TrigPoly<C> phase_shift(const TrigPoly<C>& f, int l) {
  const int depth = f.depth() + std::abs(l);
  TrigPoly<C> out(f.period(), depth, f.rows(), f.cols());
  for (int k = -f.depth(); k <= f.depth(); ++k) out[k - l] = f[k];
  return out;
}

template <class C>
struct Truncated {
  TrigPoly<C> f;
  double tail_norm = 0.0;
};

/// Drops all harmonics with |k| > new_depth and reports their l2 norm.
template <class C>
Truncated<C> truncate(const TrigPoly<C>& f, int new_depth) {
  if (new_depth < 0) throw InvalidArgument("truncate: new depth must be >= 0");
  if (new_depth >= f.depth()) return {f, 0.0};
  TrigPoly<C> out(f.period(), new_depth, f.rows(), f.cols());
  double tail = 0.0;
  for (int k = -f.depth(); k <= f.depth(); ++k) {
    if (std::abs(k) <= new_depth)
      out[k] = f[k];
    else
      tail += f[k].squaredNorm();
  }
  return {std::move(out), std::sqrt(tail)};
}

/// Smallest depth whose dropped tail stays below rel_tol * ||f||.
template <class C>
Truncated<C> trim(const TrigPoly<C>& f, double rel_tol = kDefaultTrimTol) {
  const double total = f.squared_norm();
  const double budget = rel_tol * rel_tol * total;
  double tail = 0.0;
  int d = f.depth();
  while (d > 0) {
    const double next = tail + f[d].squaredNorm() + f[-d].squaredNorm();
    if (next > budget) break;
    tail = next;
    --d;
  }
  if (d == f.depth()) return {f, 0.0};
  return truncate(f, d);
}

/// Largest |k| whose coefficient norm exceeds rel_tol * ||f||.
template <class C>
int significant_depth(const TrigPoly<C>& f, double rel_tol) {
  const double ref = std::sqrt(f.squared_norm());
  for (int d = f.depth(); d > 0; --d) {
    if (f[d].norm() > rel_tol * ref || f[-d].norm() > rel_tol * ref) return d;
  }
  return 0;
}

}  // namespace ltpmor
