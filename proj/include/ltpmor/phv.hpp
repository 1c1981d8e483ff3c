#pragma once

/// \file phv.hpp
/// Principal harmonics vector g(s): the harmonics -2K..2K of c(t)^* v(t) with
/// v = (sI - L)^{-1} b, and single entries of the harmonic transfer function.

#include <algorithm>
#include <cstdlib>

#include "ltpmor/hill.hpp"

namespace ltpmor {

struct PhvSample {
  cplx s;
  VectorXc g;  ///< g(l + 2K) holds harmonic l, l = -2K..2K
  int K = 0;

  cplx at(int l) const { return std::abs(l) > 2 * K ? cplx{} : g(l + 2 * K); }
};

/// Harmonics -L..L of the scalar function c(t)^* v(t); entry l + L is
/// <c psi_l, v> = sum_m C_m^* V_{l+m}.
inline VectorXc harmonic_projection(const TrigVecFn& c, const TrigVecFn& v, int L) {
  detail::require_same_period(c, v);
  if (c.rows() != v.rows()) throw DimensionMismatch("harmonic_projection: dimension mismatch");
  VectorXc g = VectorXc::Zero(2 * L + 1);
  for (int l = -L; l <= L; ++l) {
    cplx acc{};
    for (int m = -c.depth(); m <= c.depth(); ++m) {
      const int j = l + m;
      if (j < -v.depth() || j > v.depth()) continue;
      acc += c[m].dot(v[j]);
    }
    g(l + L) = acc;
  }
  return g;
}

/// c(t) * (sum_l alpha_l exp(i w l t)), alpha indexed l + L.
inline TrigVecFn modulated_port(const TrigVecFn& c, const VectorXc& alpha) {
  const int L = static_cast<int>((alpha.size() - 1) / 2);
  TrigVecFn s(c.period(), L, 1);
  for (int l = -L; l <= L; ++l) s[l](0) = alpha(l + L);
  return scale(c, s);
}

/// Largest harmonic above rel_tol in the forward solve with b and the adjoint
/// solve with c at the probe shift.
inline int estimate_fourier_depth(ResolventWorkspace& ws, cplx probe = {1.0, 0.0},
                                  double rel_tol = 1e-10) {
  const LtpSystem& sys = ws.system();
  const auto v = ws.solve(probe, sys.b).v;
  const auto w = ws.solve_adjoint(probe, sys.c).v;
  return std::max(significant_depth(v, rel_tol), significant_depth(w, rel_tol));
}

/// g(s) from one forward solve and 4K+1 inner products.
inline PhvSample eval_phv(ResolventWorkspace& ws, cplx s, int K) {
  if (K < 0) throw InvalidArgument("Fourier depth K must be >= 0");
  const LtpSystem& sys = ws.system();
  const auto v = ws.solve(s, sys.b).v;
  return {s, harmonic_projection(sys.c, v, 2 * K), K};
}

/// Harmonic transfer function entry <c psi_l, (sI - L)^{-1} [b psi_m]>.
/// Zero without a solve when |l - m| > 2K.
inline cplx eval_htf_entry(ResolventWorkspace& ws, cplx s, int l, int m, int K) {
  if (K < 0) throw InvalidArgument("Fourier depth K must be >= 0");
  if (std::abs(l - m) > 2 * K) return {};
  const LtpSystem& sys = ws.system();
  // b psi_m = b(t) exp(i w m t)
  const auto v = ws.solve(s, phase_shift(sys.b, -m)).v;
  const VectorXc row = harmonic_projection(sys.c, v, std::abs(l));
  return row(l + std::abs(l));
}

}  // namespace ltpmor
