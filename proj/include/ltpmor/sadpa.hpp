#pragma once

/// \file sadpa.hpp
/// Subspace-accelerated dominant pole search with deflation. Every shift adds
/// one right direction (sI - L)^{-1} b and one left direction
/// (sI - L)^{-*} c Psi^T alpha to orthonormal search spaces V and W. The
/// Petrov-Galerkin projection
///     A~ = <W, L V>, E~ = <W, V>, b~ = <W, b>, C~ = <V, c Psi^T>
/// gives a small SIMO model h~(s) = C~^* (s E~ - A~)^{-1} b~ whose most
/// dominant pole is the next shift. Converged triples are deflated out of the
/// ports, which zeroes the residues of their whole family lambda + i w Z.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ltpmor/dpa.hpp"

namespace ltpmor {

struct SearchSpaces {
  std::vector<TrigVecFn> V;
  std::vector<TrigVecFn> W;
  std::vector<TrigVecFn> LV;  ///< L applied to each column of V, filled by the caller

  std::size_t size() const noexcept { return V.size(); }
};

struct AppendOutcome {
  bool appended = false;
  bool v_rejected = false;
  bool w_rejected = false;
};

namespace detail {

/// Classical Gram-Schmidt with one reorthogonalization pass. Returns false
/// when less than `drop` of the original norm survives.
inline bool orthonormalize_against(TrigVecFn& x, const std::vector<TrigVecFn>& basis,
                                   double drop = 1e-12) {
  const double original = l2_norm(x);
  if (!(original > 0.0) || !std::isfinite(original)) return false;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<cplx> coeffs;
    coeffs.reserve(basis.size());
    for (const auto& b : basis) coeffs.push_back(inner_product(b, x));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const TrigVecFn& b = basis[i];
      if (b.depth() > x.depth()) x = x.padded(b.depth());
      for (int k = -b.depth(); k <= b.depth(); ++k) x[k] -= coeffs[i] * b[k];
    }
  }
  const double left = l2_norm(x);
  if (!(left >= drop * original)) return false;
  x = (1.0 / left) * x;
  return true;
}

}  // namespace detail

/// Appends the pair only if both directions survive orthogonalization, so V
/// and W always have equal size.
inline AppendOutcome orthogonalize_append(SearchSpaces& sp, TrigVecFn v, TrigVecFn w) {
  AppendOutcome out;
  out.v_rejected = !detail::orthonormalize_against(v, sp.V);
  out.w_rejected = !detail::orthonormalize_against(w, sp.W);
  if (out.v_rejected || out.w_rejected) return out;
  sp.V.push_back(std::move(v));
  sp.W.push_back(std::move(w));
  out.appended = true;
  return out;
}

struct ProjectedSystem {
  MatrixXc Atil;  ///< <W_i, L V_j>
  MatrixXc Etil;  ///< <W_i, V_j>
  VectorXc btil;  ///< <W_i, b>
  MatrixXc Ctil;  ///< <V_i, c psi_l>, columns l = -2K..2K
  int K = 0;

  Index size() const noexcept { return Atil.rows(); }

  /// h~(s) = C~^* (s E~ - A~)^{-1} b~, the projected principal harmonics vector.
  VectorXc eval(cplx s) const {
    const VectorXc x = (s * Etil - Atil).partialPivLu().solve(btil);
    return Ctil.adjoint() * x;
  }
};

/// Port-dependent part of the projection.
inline void project_ports(ProjectedSystem& ps, const SearchSpaces& sp, const TrigVecFn& b,
                          const TrigVecFn& c, int K) {
  const Index k = static_cast<Index>(sp.size());
  ps.K = K;
  ps.btil.resize(k);
  ps.Ctil.resize(k, 4 * K + 1);
  for (Index i = 0; i < k; ++i) {
    ps.btil(i) = inner_product(sp.W[static_cast<std::size_t>(i)], b);
    ps.Ctil.row(i) = harmonic_projection(c, sp.V[static_cast<std::size_t>(i)], 2 * K).conjugate();
  }
}

inline ProjectedSystem project_system(const SearchSpaces& sp, const TrigVecFn& b,
                                      const TrigVecFn& c, int K) {
  if (sp.size() == 0) throw InvalidArgument("project_system: empty search spaces");
  if (sp.LV.size() != sp.V.size() || sp.W.size() != sp.V.size())
    throw DimensionMismatch("project_system: V, W and L V must have equal size");
  const Index k = static_cast<Index>(sp.size());
  ProjectedSystem ps;
  ps.Atil.resize(k, k);
  ps.Etil.resize(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) {
      const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
      ps.Atil(i, j) = inner_product(sp.W[ui], sp.LV[uj]);
      ps.Etil(i, j) = inner_product(sp.W[ui], sp.V[uj]);
    }
  project_ports(ps, sp, b, c, K);
  return ps;
}

struct ProjectedPole {
  cplx lambda;
  VectorXc x;         ///< right eigenvector of (A~, E~)
  VectorXc y;         ///< left eigenvector, y^* E~ x = 1
  VectorXc residue;   ///< (C~^* x)(y^* b~), length 4K + 1
  double dominance = 0.0;  ///< ||residue|| / |Re lambda|
};

struct PoleFilter {
  double real_part_cap = std::numeric_limits<double>::infinity();
  double residue_floor = 0.0;  ///< absolute
  double family_tol = 1e-6;
};

/// Eigen-decomposition of the projected pencil and dominance ranking; poles in
/// a found family, beyond the real-part cap, or with negligible residue are
/// dropped. Sorted by dominance, largest first.
inline std::vector<ProjectedPole> rank_projected_poles(const ProjectedSystem& ps, double omega,
                                                       const std::vector<cplx>& found,
                                                       const PoleFilter& filter = {}) {
  const Index k = ps.size();
  if (k == 0) return {};
  Eigen::PartialPivLU<MatrixXc> elu(ps.Etil);
  const Eigen::JacobiSVD<MatrixXc> svd(ps.Etil);
  const auto& sv = svd.singularValues();
  if (!(sv(k - 1) > 1e-13 * sv(0)))
    throw SingularPencil("projected pencil: E~ is numerically singular (sigma_min / sigma_max = " +
                         std::to_string(sv(k - 1) / sv(0)) + ")");
  const MatrixXc M = elu.solve(ps.Atil);
  Eigen::ComplexEigenSolver<MatrixXc> es(M);
  if (es.info() != Eigen::Success) throw SingularPencil("projected eigenproblem did not converge");
  const MatrixXc X = es.eigenvectors();
  // Y^* = X^{-1} E~^{-1}, so that Y^* A~ = Lambda Y^* E~ and Y^* E~ X = I
  const MatrixXc Yh = X.partialPivLu().solve(elu.solve(MatrixXc::Identity(k, k)));

  std::vector<ProjectedPole> poles;
  for (Index j = 0; j < k; ++j) {
    ProjectedPole p;
    p.lambda = es.eigenvalues()(j);
    if (!std::isfinite(p.lambda.real()) || !std::isfinite(p.lambda.imag())) continue;
    if (std::abs(p.lambda.real()) > filter.real_part_cap || p.lambda.real() == 0.0) continue;
    bool known = false;
    for (cplx f : found)
      if (family_distance(p.lambda, f, omega) < filter.family_tol) known = true;
    if (known) continue;
    p.x = X.col(j);
    p.y = Yh.row(j).adjoint();
    p.residue = (ps.Ctil.adjoint() * p.x) * p.y.dot(ps.btil);
    const double rn = p.residue.norm();
    if (!std::isfinite(rn) || rn <= filter.residue_floor) continue;
    p.dominance = rn / std::abs(p.lambda.real());
    poles.push_back(std::move(p));
  }
  std::stable_sort(poles.begin(), poles.end(),
                   [](const ProjectedPole& a, const ProjectedPole& b) { return a.dominance > b.dominance; });
  return poles;
}

struct DeflatedPorts {
  TrigVecFn b;
  TrigVecFn c;
  std::vector<Eigentriple> found;
};

/// b <- b - p (q^* b),  c <- c - q (p^* c), trimmed at 1e-12 relative.
inline DeflatedPorts deflate(DeflatedPorts ports, const Eigentriple& t) {
  const cplx m = t.q(0.0).dot(t.p(0.0));
  if (std::abs(m - 1.0) > 1e-6)
    throw NormalizationError("deflate: q(0)^* p(0) = " + std::to_string(std::abs(m)) +
                             " differs from 1");
  ports.b = trim(ports.b - scale(t.p, pointwise_dot(t.q, ports.b))).f;
  ports.c = trim(ports.c - scale(t.q, pointwise_dot(t.p, ports.c))).f;
  ports.found.push_back(t);
  return ports;
}

struct SadpaOptions {
  int n_want = 1;
  double tol = 1e-8;
  int max_iter = 50;
  int K = -1;                  ///< Fourier depth; estimated when negative
  double real_part_cap = 0.0;  ///< <= 0 selects 10 max |Re| over initial shifts and found poles
  double residue_floor = 1e-12;  ///< relative to ||b|| ||c||
  double family_tol = 1e-6;
  bool refine = true;
};

struct SadpaLogEntry {
  int iteration = 0;       ///< solve count when the entry was written
  cplx shift;              ///< shift of the most recent solve
  cplx top_pole;           ///< most dominant projected pole (NaN if none)
  double residual = std::numeric_limits<double>::quiet_NaN();
  Index subspace_dim = 0;
  std::string event;       ///< "solve", "converged", "rejected", "cap-relaxed", "restart"
};

struct FoundPole {
  Eigentriple triple;      ///< canonicalized
  double dominance = 0.0;  ///< projected dominance when accepted
  int iteration = 0;       ///< solve count at acceptance
};

struct SadpaResult {
  std::vector<FoundPole> poles;
  std::vector<SadpaLogEntry> log;
  DpaTrace trace;          ///< shifts and residuals per solve
  DeflatedPorts ports;     ///< final deflated ports
  int K = 0;
  int iterations = 0;
  double real_part_cap = 0.0;
  double residue_floor = 0.0;
};

/// Runs the subspace-accelerated search until n_want families are found.
/// Extra initial shifts seed the spaces before the first projection.
inline SadpaResult sadpa_run(ResolventWorkspace& ws, const std::vector<cplx>& s0,
                             const SadpaOptions& opts) {
  if (s0.empty()) throw InvalidArgument("sadpa: at least one initial shift is required");
  if (opts.n_want < 1) throw InvalidArgument("sadpa: n_want must be >= 1");
  if (!(opts.tol > 0.0)) throw InvalidArgument("sadpa: tol must be positive");
  if (opts.max_iter < 1) throw InvalidArgument("sadpa: max_iter must be >= 1");
  const LtpSystem& sys = ws.system();
  const double omega = sys.omega();

  SadpaResult res;
  res.K = opts.K >= 0 ? opts.K : estimate_fourier_depth(ws);
  res.ports = {sys.b, sys.c, {}};
  res.residue_floor = opts.residue_floor * l2_norm(sys.b) * l2_norm(sys.c);

  std::vector<cplx> found_lambdas;
  auto cap = [&]() {
    if (opts.real_part_cap > 0.0) return opts.real_part_cap;
    double m = 0.0;
    for (cplx s : s0) m = std::max(m, std::abs(s.real()));
    for (cplx l : found_lambdas) m = std::max(m, std::abs(l.real()));
    return m > 0.0 ? 10.0 * m : std::numeric_limits<double>::infinity();
  };

  SearchSpaces sp;
  ProjectedSystem ps;
  auto extend_projection = [&]() {
    const Index k = static_cast<Index>(sp.size());
    ps.Atil.conservativeResize(k, k);
    ps.Etil.conservativeResize(k, k);
    const auto last = static_cast<std::size_t>(k - 1);
    for (Index i = 0; i < k; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      ps.Atil(i, k - 1) = inner_product(sp.W[ui], sp.LV[last]);
      ps.Etil(i, k - 1) = inner_product(sp.W[ui], sp.V[last]);
      ps.Atil(k - 1, i) = inner_product(sp.W[last], sp.LV[ui]);
      ps.Etil(k - 1, i) = inner_product(sp.W[last], sp.V[ui]);
    }
  };

  auto combine = [](const std::vector<TrigVecFn>& basis, const VectorXc& coef) {
    int depth = 0;
    for (const auto& b : basis) depth = std::max(depth, b.depth());
    TrigVecFn out(basis.front().period(), depth, basis.front().rows());
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const TrigVecFn& b = basis[i];
      for (int k = -b.depth(); k <= b.depth(); ++k) out[k] += coef(static_cast<Index>(i)) * b[k];
    }
    return out;
  };

  auto log_entry = [&](cplx shift, cplx top, double resid, std::string event) {
    res.log.push_back({res.iterations, shift, top, resid, static_cast<Index>(sp.size()),
                       std::move(event)});
  };

  const cplx nan_c{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  std::size_t seed = 0;
  cplx next = s0.front();

  while (static_cast<int>(res.poles.size()) < opts.n_want) {
    if (res.iterations >= opts.max_iter) {
      std::vector<Eigentriple> partial;
      for (const auto& p : res.poles) partial.push_back(p.triple);
      throw MaxIterExceeded("sadpa: found " + std::to_string(res.poles.size()) + " of " +
                                std::to_string(opts.n_want) + " poles in " +
                                std::to_string(opts.max_iter) + " iterations",
                            res.trace, std::move(partial));
    }

    // expansion
    cplx s = seed < s0.size() ? s0[seed++] : next;
    TrigVecFn v = detail::solve_nudged(ws, s, res.ports.b, res.trace.perturbations);
    VectorXc alpha = harmonic_projection(res.ports.c, v, 2 * res.K);
    if (alpha.norm() == 0.0) {
      alpha = VectorXc::Zero(4 * res.K + 1);
      alpha(2 * res.K) = 1.0;
    }
    TrigVecFn w = ws.solve_adjoint(s, modulated_port(res.ports.c, alpha)).v;
    ++res.iterations;
    const AppendOutcome app = orthogonalize_append(sp, std::move(v), std::move(w));
    if (app.appended) {
      sp.LV.push_back(ws.apply(sp.V.back()));
      extend_projection();
    }
    res.trace.shifts.push_back(s);
    res.trace.iterations = res.iterations;
    if (seed < s0.size()) {
      res.trace.residuals.push_back(std::numeric_limits<double>::quiet_NaN());
      log_entry(s, nan_c, std::numeric_limits<double>::quiet_NaN(), app.appended ? "seed" : "rejected");
      continue;
    }
    if (sp.size() == 0) {
      res.trace.residuals.push_back(std::numeric_limits<double>::quiet_NaN());
      log_entry(s, nan_c, std::numeric_limits<double>::quiet_NaN(), "rejected");
      next = s0.front() + 1e-3 * (1.0 + std::abs(s0.front())) * static_cast<double>(res.iterations);
      continue;
    }

    // selection and convergence checks; repeats after every deflation
    double top_residual = std::numeric_limits<double>::quiet_NaN();
    while (true) {
      project_ports(ps, sp, res.ports.b, res.ports.c, res.K);
      PoleFilter filter{cap(), res.residue_floor, opts.family_tol};
      std::vector<ProjectedPole> poles = rank_projected_poles(ps, omega, found_lambdas, filter);
      if (poles.empty() && std::isfinite(filter.real_part_cap)) {
        filter.real_part_cap = std::numeric_limits<double>::infinity();
        poles = rank_projected_poles(ps, omega, found_lambdas, filter);
        if (!poles.empty()) log_entry(s, poles.front().lambda, std::numeric_limits<double>::quiet_NaN(), "cap-relaxed");
      }
      if (poles.empty()) {
        next = s0.front();
        log_entry(s, nan_c, std::numeric_limits<double>::quiet_NaN(), "restart");
        break;
      }
      const ProjectedPole& top = poles.front();
      const TrigVecFn vx = combine(sp.V, top.x);
      const TrigVecFn lvx = combine(sp.LV, top.x);
      const double nvx = l2_norm(vx);
      top_residual = l2_norm(lvx - top.lambda * vx.padded(lvx.depth())) / nvx;
      if (!(top_residual < opts.tol)) {
        next = top.lambda;
        log_entry(s, top.lambda, top_residual, app.appended ? "solve" : "rejected");
        break;
      }

      Eigentriple t = make_triple(ws, top.lambda, vx, combine(sp.W, top.y));
      if (opts.refine) t = refine_triple(ws, t, res.trace);
      t = canonicalize(t, omega);
      log_entry(s, t.lambda, top_residual, "converged");
      found_lambdas.push_back(t.lambda);
      res.ports = deflate(std::move(res.ports), t);
      res.poles.push_back({std::move(t), top.dominance, res.iterations});
      if (static_cast<int>(res.poles.size()) >= opts.n_want) break;
    }
    res.trace.residuals.push_back(top_residual);
  }
  res.trace.converged = true;
  res.real_part_cap = cap();
  return res;
}

}  // namespace ltpmor
