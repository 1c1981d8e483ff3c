#pragma once

/// \file dpa.hpp
/// Eigentriples (lambda, p, q) of L and the single-shift dominant pole
/// iteration: Newton on 1 / ||g(s)|| with the two-sided Rayleigh update
///     s_{k+1} = <w_k, L v_k> / <w_k, v_k>,
/// v_k = (s_k I - L)^{-1} b,  w_k = (s_k I - L)^{-*} c(t) (Psi(t)^T alpha_k),
/// alpha_k = g(s_k).

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ltpmor/hill.hpp"
#include "ltpmor/phv.hpp"

namespace ltpmor {

/// L p = lambda p, L* q = conj(lambda) q, q(0)^* p(0) = 1, ||p|| = 1.
struct Eigentriple {
  cplx lambda;
  TrigVecFn p;
  TrigVecFn q;
  double residual = 0.0;       ///< ||L p - lambda p|| / ||p||
  double left_residual = 0.0;  ///< ||L* q - conj(lambda) q|| / ||q||
};

struct DpaTrace {
  std::vector<cplx> shifts;
  std::vector<double> residuals;
  bool converged = false;
  int iterations = 0;
  int perturbations = 0;      ///< shifts moved off a numerically singular point
  int refinement_solves = 0;  ///< solves spent polishing the converged triple
};

/// Iteration budget exhausted; carries the trace and whatever converged so far.
class MaxIterExceeded : public LtpError {
 public:
  MaxIterExceeded(const std::string& what, DpaTrace trace, std::vector<Eigentriple> found = {})
      : LtpError(what), trace_(std::move(trace)), found_(std::move(found)) {}
  const char* kind() const noexcept override { return "MaxIterExceeded"; }
  const DpaTrace& trace() const noexcept { return trace_; }
  const std::vector<Eigentriple>& found() const noexcept { return found_; }

 private:
  DpaTrace trace_;
  std::vector<Eigentriple> found_;
};

struct CanonicalLambda {
  cplx lambda;
  int k = 0;
};

/// lambda = lambda_c + i w k with Im(lambda_c) in (-w/2, w/2].
inline CanonicalLambda canonicalize_lambda(cplx lambda, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("canonicalize_lambda: omega must be positive");
  const int k = static_cast<int>(std::ceil(lambda.imag() / omega - 0.5));
  return {lambda - kI * (omega * k), k};
}

/// Moves the triple to the canonical member of its family: both eigenfunctions
/// are multiplied by exp(i w k t), which leaves q^* p unchanged.
inline Eigentriple canonicalize(Eigentriple t, double omega) {
  const CanonicalLambda c = canonicalize_lambda(t.lambda, omega);
  if (c.k == 0) return t;
  t.lambda = c.lambda;
  t.p = trim(phase_shift(t.p, -c.k), 0.0).f;
  t.q = trim(phase_shift(t.q, -c.k), 0.0).f;
  return t;
}

/// Distance between the canonical members of two eigenvalue families.
inline double family_distance(cplx a, cplx b, double omega) {
  const cplx d = canonicalize_lambda(a - b, omega).lambda;
  return std::abs(d);
}

/// max over `samples` uniform times of |q(t)^* p(t) - 1|.
inline double biorthogonality_defect(const Eigentriple& t, int samples = 64) {
  const TrigVecFn qp = pointwise_dot(t.q, t.p);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double time = qp.period() * i / samples;
    worst = std::max(worst, std::abs(qp(time)(0) - 1.0));
  }
  return worst;
}

inline double right_residual(const ResolventWorkspace& ws, cplx lambda, const TrigVecFn& p) {
  const TrigVecFn Lp = ws.apply(p);
  return l2_norm(Lp - lambda * p.padded(Lp.depth())) / l2_norm(p);
}

inline double left_residual(const ResolventWorkspace& ws, cplx lambda, const TrigVecFn& q) {
  const TrigVecFn Lq = ws.apply_adjoint(q);
  return l2_norm(Lq - std::conj(lambda) * q.padded(Lq.depth())) / l2_norm(q);
}

namespace detail {

/// Forward solve that nudges the shift by 1e-10 (1 + |s|), growing tenfold per
/// retry, when it sits on the spectrum. `s` returns the shift actually used.
inline TrigVecFn solve_nudged(ResolventWorkspace& ws, cplx& s, const TrigVecFn& rhs,
                              int& perturbations) {
  double step = 1e-10 * (1.0 + std::abs(s));
  for (int attempt = 0;; ++attempt) {
    try {
      return ws.solve(s, rhs).v;
    } catch (const NearSingularShift&) {
      if (attempt >= 4) throw;
      s += step;
      step *= 10.0;
      ++perturbations;
    }
  }
}

}  // namespace detail

/// Builds the normalized triple from unnormalized right/left vectors:
/// p = v / ||v||, q = w / (p(0)^* w(0)). Both are trimmed at 1e-12.
inline Eigentriple make_triple(const ResolventWorkspace& ws, cplx lambda, const TrigVecFn& v,
                               const TrigVecFn& w) {
  Eigentriple t;
  t.lambda = lambda;
  t.p = trim((1.0 / l2_norm(v)) * v).f;
  const TrigVecFn wt = trim(w).f;
  const cplx gamma = t.p(0.0).dot(wt(0.0));
  if (!(std::abs(gamma) > 1e-14 * t.p(0.0).norm() * wt(0.0).norm()))
    throw NormalizationError("left and right eigenfunctions are orthogonal at t = 0");
  t.q = (1.0 / gamma) * wt;
  t.residual = right_residual(ws, lambda, t.p);
  t.left_residual = left_residual(ws, lambda, t.q);
  return t;
}

/// One step of two-sided inverse iteration at sigma = lambda from (p, q),
/// followed by the Rayleigh update. Returns the better of the input and the
/// polished triple as measured by the larger of the two residuals.
inline Eigentriple refine_triple(ResolventWorkspace& ws, const Eigentriple& t, DpaTrace& trace) {
  cplx sigma = t.lambda;
  TrigVecFn v = detail::solve_nudged(ws, sigma, t.p, trace.perturbations);
  TrigVecFn w = ws.solve_adjoint(sigma, t.q).v;
  trace.refinement_solves += 2;
  const cplx den = inner_product(w, v);
  if (den == cplx{}) return t;
  const cplx lam = inner_product(w, ws.apply(v)) / den;
  Eigentriple polished;
  try {
    polished = make_triple(ws, lam, v, w);
  } catch (const NormalizationError&) {
    return t;
  }
  const double before = std::max(t.residual, t.left_residual);
  const double after = std::max(polished.residual, polished.left_residual);
  return after <= before ? polished : t;
}

struct DpaOptions {
  double tol = 1e-8;
  int max_iter = 50;
  int K = -1;      ///< Fourier depth; estimated when negative
  bool refine = true;
};

struct DpaResult {
  Eigentriple triple;
  DpaTrace trace;
  int K = 0;
};

/// Single-shift dominant pole iteration from s0. The returned triple is not
/// canonicalized; see canonicalize().
inline DpaResult dpa_iterate(ResolventWorkspace& ws, cplx s0, const DpaOptions& opts = {}) {
  if (!(opts.tol > 0.0)) throw InvalidArgument("dpa: tol must be positive");
  if (opts.max_iter < 1) throw InvalidArgument("dpa: max_iter must be >= 1");
  const LtpSystem& sys = ws.system();
  const int K = opts.K >= 0 ? opts.K : estimate_fourier_depth(ws);

  DpaTrace trace;
  cplx s = s0;
  for (int it = 0; it < opts.max_iter; ++it) {
    TrigVecFn v = detail::solve_nudged(ws, s, sys.b, trace.perturbations);
    const VectorXc alpha = harmonic_projection(sys.c, v, 2 * K);
    if (alpha.norm() == 0.0)
      throw BreakdownAtShift("dpa: g(s) vanishes at s = (" + std::to_string(s.real()) + ", " +
                             std::to_string(s.imag()) + ")");
    TrigVecFn w = ws.solve_adjoint(s, modulated_port(sys.c, alpha)).v;
    const TrigVecFn Lv = ws.apply(v);
    const cplx den = inner_product(w, v);
    if (den == cplx{}) throw BreakdownAtShift("dpa: <w, v> vanishes");
    const cplx s_next = inner_product(w, Lv) / den;
    const double res = l2_norm(Lv - s_next * v.padded(Lv.depth())) / l2_norm(v);
    trace.shifts.push_back(s);
    trace.residuals.push_back(res);
    trace.iterations = it + 1;
    if (!std::isfinite(res) || !std::isfinite(s_next.real()) || !std::isfinite(s_next.imag()))
      throw BreakdownAtShift("dpa: non-finite update");
    if (res < opts.tol) {
      trace.converged = true;
      Eigentriple t = make_triple(ws, s_next, v, w);
      if (opts.refine) t = refine_triple(ws, t, trace);
      return {std::move(t), std::move(trace), K};
    }
    s = s_next;
  }
  throw MaxIterExceeded("dpa: no convergence in " + std::to_string(opts.max_iter) + " iterations",
                        std::move(trace));
}

}  // namespace ltpmor
