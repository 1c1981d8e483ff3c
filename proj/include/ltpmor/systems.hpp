#pragma once

/// \file systems.hpp
/// SISO linear time-periodic systems  x' = A(t) x + b(t) u,  y = c(t)^* x,
/// their JSON file form, and the synthetic benchmark family whose Floquet
/// factors are known in closed form.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "ltpmor/trigfun.hpp"
#include "ltpmor/trigfun_json.hpp"

namespace ltpmor {

struct LtpSystem {
  TrigMatFn A;
  TrigVecFn b;
  TrigVecFn c;

  double period() const noexcept { return A.period(); }
  double omega() const noexcept { return A.omega(); }
  Index dim() const noexcept { return A.rows(); }

  void validate() const {
    if (A.rows() != A.cols())
      throw ValidationError("A(t) must be square, got " + std::to_string(A.rows()) + "x" +
                            std::to_string(A.cols()));
    if (b.rows() != A.rows() || c.rows() != A.rows())
      throw ValidationError("port dimensions must match A(t): n = " + std::to_string(A.rows()) +
                            ", dim b = " + std::to_string(b.rows()) +
                            ", dim c = " + std::to_string(c.rows()));
    if (b.period() != A.period() || c.period() != A.period())
      throw ValidationError("A(t), b(t) and c(t) must share one period");
  }
};

/// Closed-form Floquet data of the benchmark family.
struct ExampleGroundTruth {
  Eigen::VectorXd lambdas;  ///< diagonal of R
  TrigMatFn P;
  TrigMatFn Pinv;
  TrigVecFn bhat;  ///< P(t)^{-1} b(t)
  TrigVecFn chat;  ///< P(t)^* c(t)
  std::vector<double> spectrum_right;  ///< up to 10 rightmost eigenvalues, rightmost first

  /// Left Floquet basis Q(t) = P(t)^{-*}.
  TrigMatFn Q() const { return adjoint(Pinv); }
};

struct ExampleParams {
  int n = 1000;
  int n_slow = 10;
  double slow_lo = -4.0, slow_hi = 0.0;  ///< decades of the slow magnitudes
  double fast_lo = 3.0, fast_hi = 6.0;   ///< decades of the fast magnitudes
};

struct ExampleSystem {
  LtpSystem system;
  ExampleGroundTruth truth;
};

/// logspace(lo, hi, m) with MATLAB semantics (m == 1 gives 10^hi).
inline std::vector<double> logspace(double lo, double hi, int m) {
  std::vector<double> out;
  if (m <= 0) return out;
  if (m == 1) return {std::pow(10.0, hi)};
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) out.push_back(std::pow(10.0, lo + (hi - lo) * i / (m - 1)));
  return out;
}

/// Benchmark with P(t) = I + sin(t) E, where E has a one at every odd column
/// pair (1,2), (3,4), ... (1-based). E^2 = 0, so P^{-1} = I - sin(t) E and
///   A = P' P^{-1} + P R P^{-1} = R + cos(t) E + sin(t) (E R - R E),
/// assembled here directly in coefficient space. T = 2 pi, b = c = ones.
inline ExampleSystem build_example(const ExampleParams& prm) {
  const int n = prm.n;
  if (n < 2 || n % 2 != 0) throw InvalidArgument("example size n must be even and >= 2");
  if (prm.n_slow < 0 || prm.n_slow > n)
    throw InvalidArgument("n_slow must lie in [0, n]");
  for (double d : {prm.slow_lo, prm.slow_hi, prm.fast_lo, prm.fast_hi})
    if (!std::isfinite(d)) throw InvalidArgument("decade ranges must be finite");

  std::vector<double> mags = logspace(prm.slow_lo, prm.slow_hi, prm.n_slow);
  const std::vector<double> fast = logspace(prm.fast_lo, prm.fast_hi, n - prm.n_slow);
  mags.insert(mags.end(), fast.begin(), fast.end());

  Eigen::VectorXd r(n);
  for (int i = 0; i < n; ++i) r(i) = -mags[static_cast<std::size_t>(i)];

  const double period = 2.0 * std::numbers::pi;
  const cplx half_over_i = 1.0 / (2.0 * kI);  // sin(t) = (e^{it} - e^{-it}) / (2i)

  TrigMatFn P(period, 1, n, n), Pinv(period, 1, n, n), A(period, 1, n, n);
  P[0].setIdentity();
  Pinv[0].setIdentity();
  A[0] = r.cast<cplx>().asDiagonal();
  for (int j = 0; j + 1 < n; j += 2) {
    P[1](j, j + 1) = half_over_i;
    P[-1](j, j + 1) = -half_over_i;
    Pinv[1](j, j + 1) = -half_over_i;
    Pinv[-1](j, j + 1) = half_over_i;
    const double commutator = r(j + 1) - r(j);  // (E R - R E)(j, j+1)
    A[1](j, j + 1) = 0.5 + commutator * half_over_i;
    A[-1](j, j + 1) = 0.5 - commutator * half_over_i;
  }

  LtpSystem sys{std::move(A), TrigVecFn::constant(period, VectorXc::Ones(n)),
                TrigVecFn::constant(period, VectorXc::Ones(n))};

  ExampleGroundTruth gt;
  gt.lambdas = r;
  gt.bhat = multiply(Pinv, sys.b);
  gt.chat = multiply(adjoint(P), sys.c);
  gt.P = std::move(P);
  gt.Pinv = std::move(Pinv);
  std::vector<double> sorted(r.data(), r.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  sorted.resize(std::min<std::size_t>(10, sorted.size()));
  gt.spectrum_right = std::move(sorted);
  return {std::move(sys), std::move(gt)};
}

inline json system_to_json(const LtpSystem& sys) {
  return {{"n", sys.dim()},
          {"T", sys.period()},
          {"A", to_json(sys.A)},
          {"b", to_json(sys.b)},
          {"c", to_json(sys.c)}};
}

inline LtpSystem system_from_json(const json& j) {
  const char* what = "system";
  const Index n = detail::require_number<Index>(j, "n", what);
  const double T = detail::require_number<double>(j, "T", what);
  LtpSystem sys{trig_mat_from_json(detail::require_field(j, "A", what), "system.A"),
                trig_vec_from_json(detail::require_field(j, "b", what), "system.b"),
                trig_vec_from_json(detail::require_field(j, "c", what), "system.c")};
  if (sys.A.rows() != n) throw ValidationError("system: \"n\" disagrees with A(t)");
  if (sys.A.period() != T) throw ValidationError("system: \"T\" disagrees with the period of A(t)");
  sys.validate();
  return sys;
}

inline void save_system(const LtpSystem& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  out << system_to_json(sys).dump(1) << '\n';
}

inline LtpSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open system file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + path + ": " + e.what());
  }
  return system_from_json(j);
}

}  // namespace ltpmor
