#pragma once

// Random instances and brute-force references shared by the test binaries.

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "ltpmor/systems.hpp"
#include "ltpmor/trigfun.hpp"

namespace ltpmor::fixtures {

inline cplx random_complex(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, 1.0);
  return scale * cplx{nd(rng), nd(rng)};
}

inline TrigVecFn random_vec(std::mt19937_64& rng, double period, int depth, Index n,
                            double decay = 0.5) {
  TrigVecFn f(period, depth, n);
  for (int k = -depth; k <= depth; ++k)
    for (Index i = 0; i < n; ++i) f[k](i) = random_complex(rng, std::pow(decay, std::abs(k)));
  return f;
}

inline TrigMatFn random_mat(std::mt19937_64& rng, double period, int depth, Index rows, Index cols,
                            double decay = 0.5) {
  TrigMatFn f(period, depth, rows, cols);
  for (int k = -depth; k <= depth; ++k)
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) f[k](i, j) = random_complex(rng, std::pow(decay, std::abs(k)));
  return f;
}

struct RandomSystemSpec {
  Index n = 4;
  int depth_a = 1;
  int depth_b = 0;
  int depth_c = 0;
  double period = 2.0 * std::numbers::pi;
  double coupling = 0.3;  ///< size of the harmonic parts of A
  double decay_lo = 0.2;  ///< range of -diag(A_0)
  double decay_hi = 3.0;
};

/// Stable random system: A_0 = -diag(decay_lo..decay_hi) + small noise,
/// A_k of size coupling / k.
inline LtpSystem random_system(std::mt19937_64& rng, const RandomSystemSpec& spec) {
  const Index n = spec.n;
  std::uniform_real_distribution<double> ud(spec.decay_lo, spec.decay_hi);
  TrigMatFn A(spec.period, spec.depth_a, n, n);
  for (Index i = 0; i < n; ++i) A[0](i, i) = -ud(rng);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) A[0](i, j) += random_complex(rng, 0.05);
  for (int k = 1; k <= spec.depth_a; ++k) {
    const double sc = spec.coupling / (k * std::sqrt(static_cast<double>(n)));
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        A[k](i, j) = random_complex(rng, sc);
        A[-k](i, j) = random_complex(rng, sc);
      }
  }
  LtpSystem sys{std::move(A), random_vec(rng, spec.period, spec.depth_b, n),
                random_vec(rng, spec.period, spec.depth_c, n)};
  sys.validate();
  return sys;
}

/// Dense Hill matrix of sI - L on harmonics -N..N.
inline MatrixXc dense_hill(const LtpSystem& sys, cplx s, int N) {
  const Index n = sys.dim();
  const double w = sys.omega();
  MatrixXc H = MatrixXc::Zero((2 * N + 1) * n, (2 * N + 1) * n);
  for (int k = -N; k <= N; ++k) {
    H.block((k + N) * n, (k + N) * n, n, n) += (s + kI * (w * k)) * MatrixXc::Identity(n, n);
    for (int m = -N; m <= N; ++m)
      H.block((k + N) * n, (m + N) * n, n, n) -= sys.A.at(k - m);
  }
  return H;
}

/// -v'(t) + A(t) v(t) at time t by central differences of the sampled v.
inline VectorXc fd_operator(const LtpSystem& sys, const TrigVecFn& v, double t, double h = 1e-6) {
  const VectorXc dv = (v(t + h) - v(t - h)) / (2.0 * h);
  return -dv + sys.A(t) * v(t);
}

inline double rel_diff(const VectorXc& a, const VectorXc& b) {
  const double ref = std::max(a.norm(), b.norm());
  return ref == 0.0 ? 0.0 : (a - b).norm() / ref;
}

inline double rel_diff(cplx a, cplx b) {
  const double ref = std::max(std::abs(a), std::abs(b));
  return ref == 0.0 ? 0.0 : std::abs(a - b) / ref;
}

inline double coeff_diff(const TrigVecFn& a, const TrigVecFn& b) { return l2_norm(a - b); }

}  // namespace ltpmor::fixtures
