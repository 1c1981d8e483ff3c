#pragma once

/// \file hill.hpp
/// The periodic operator L = -d/dt + A(t), its Hilbert-space adjoint
/// L* = d/dt + A(t)^*, and shifted resolvent solves by truncated harmonic
/// balance.
///
/// Harmonics -N..N of an n-vector function are packed block-wise, harmonic k
/// occupying entries (k + N) n .. (k + N) n + n - 1. In that packing sI - L is
/// the Hill matrix with blocks
///     H(k, m) = (s + i w k) I delta_km - A_{k-m},   |k - m| <= depth(A),
/// and (sI - L)* = conj(s) I - L* is exactly H^H, so forward and adjoint solves
/// share one factorization.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "ltpmor/systems.hpp"
#include "ltpmor/trigfun.hpp"

namespace ltpmor {

namespace detail {

inline void require_compatible(const LtpSystem& sys, const TrigVecFn& v, const char* what) {
  if (v.rows() != sys.dim())
    throw DimensionMismatch(std::string(what) + ": vector dimension " + std::to_string(v.rows()) +
                            " differs from system order " + std::to_string(sys.dim()));
  if (v.period() != sys.period())
    throw PeriodMismatch(std::string(what) + ": period differs from the system period");
}

}  // namespace detail

/// (L v)_k = -i w k V_k + sum_m A_m V_{k-m}. Exact: the depth grows by depth(A).
inline TrigVecFn apply_operator(const LtpSystem& sys, const TrigVecFn& v) {
  detail::require_compatible(sys, v, "apply_operator");
  TrigVecFn out = multiply(sys.A, v).padded(v.depth());
  const double w = sys.omega();
  for (int k = -v.depth(); k <= v.depth(); ++k) out[k] -= (kI * (w * k)) * v[k];
  return out;
}

/// (L* w)_k = i w k W_k + sum_m (A_{-m})^* W_{k-m}.
inline TrigVecFn apply_adjoint_operator(const LtpSystem& sys, const TrigVecFn& wfn) {
  detail::require_compatible(sys, wfn, "apply_adjoint_operator");
  const TrigMatFn& A = sys.A;
  TrigVecFn out(wfn.period(), A.depth() + wfn.depth(), wfn.rows());
  for (int m = -A.depth(); m <= A.depth(); ++m) {
    if (A[-m].isZero(0.0)) continue;
    for (int j = -wfn.depth(); j <= wfn.depth(); ++j)
      out[m + j].noalias() += A[-m].adjoint() * wfn[j];
  }
  const double w = sys.omega();
  for (int k = -wfn.depth(); k <= wfn.depth(); ++k) out[k] += (kI * (w * k)) * wfn[k];
  return out;
}

struct ResolventOptions {
  int extra_harmonics = 8;      ///< N_h = depth(A) + depth(b) + extra
  int max_doublings = 3;        ///< per solve, when the tail stays large
  double tail_tol = 1e-8;       ///< ||V_{+-N}|| / ||v||
  double residual_tol = 1e-10;  ///< out-of-window residual relative to ||rhs||
  double rcond_min = 1e-13;     ///< below this the shift counts as an eigenvalue
  int harmonic_depth = -1;      ///< fixed N_h when >= 0
};

struct ResolventSolution {
  TrigVecFn v;
  double tail_norm = 0.0;
  double residual = 0.0;  ///< ||(sI - L) v - rhs|| / ||rhs|| from harmonics beyond the window
  double rcond = 0.0;
  int harmonic_depth = 0;
};

struct ResolventStats {
  int factorizations = 0;
  int solves = 0;
  int doublings = 0;
  double max_tail = 0.0;
  double min_rcond = std::numeric_limits<double>::infinity();
};

/// Pack harmonics -N..N of v (zero beyond its depth, dropped beyond N).
inline VectorXc hill_pack(const TrigVecFn& v, int N) {
  const Index n = v.rows();
  VectorXc x = VectorXc::Zero((2 * N + 1) * n);
  const int m = std::min(N, v.depth());
  for (int k = -m; k <= m; ++k) x.segment((k + N) * n, n) = v[k];
  return x;
}

inline TrigVecFn hill_unpack(const VectorXc& x, Index n, int N, double period) {
  TrigVecFn v(period, N, n);
  for (int k = -N; k <= N; ++k) v[k] = x.segment((k + N) * n, n);
  return v;
}

/// Factorization cache and harmonic window for resolvent solves of one system.
/// Single writer: the cache mutates on every new shift.
class ResolventWorkspace {
 public:
  using SparseMat = Eigen::SparseMatrix<cplx>;

  explicit ResolventWorkspace(const LtpSystem& sys, ResolventOptions opts = {})
      : sys_(&sys), opts_(opts) {
    sys.validate();
    base_depth_ = opts.harmonic_depth >= 0
                      ? opts.harmonic_depth
                      : sys.A.depth() + sys.b.depth() + opts.extra_harmonics;
    base_depth_ = std::max(base_depth_, sys.A.depth());
    depth_ = base_depth_;
    for (int d = -sys.A.depth(); d <= sys.A.depth(); ++d) {
      SparseMat blk = sys.A[d].sparseView(0.0, 0.0);
      blk.makeCompressed();
      a_sparse_.push_back(std::move(blk));
    }
  }

  const LtpSystem& system() const noexcept { return *sys_; }
  const ResolventOptions& options() const noexcept { return opts_; }
  int harmonic_depth() const noexcept { return depth_; }
  const ResolventStats& stats() const noexcept { return stats_; }

  /// Solves (sI - L) v = rhs.
  ResolventSolution solve(cplx s, const TrigVecFn& rhs) { return solve_impl(s, rhs, false); }

  /// Solves (sI - L)* w = rhs, i.e. (conj(s) I - L*) w = rhs.
  ResolventSolution solve_adjoint(cplx s, const TrigVecFn& rhs) {
    return solve_impl(s, rhs, true);
  }

  /// Operator application through the sparse coefficient blocks. Same result
  /// as apply_operator, cheaper when A(t) is sparse.
  TrigVecFn apply(const TrigVecFn& v) const {
    detail::require_compatible(*sys_, v, "ResolventWorkspace::apply");
    const int da = sys_->A.depth();
    TrigVecFn out(v.period(), v.depth() + da, v.rows());
    for (int d = -da; d <= da; ++d) {
      const SparseMat& blk = a_sparse_[static_cast<std::size_t>(d + da)];
      if (blk.nonZeros() == 0) continue;
      for (int j = -v.depth(); j <= v.depth(); ++j) out[d + j] += blk * v[j];
    }
    const double w = sys_->omega();
    for (int k = -v.depth(); k <= v.depth(); ++k) out[k] -= (kI * (w * k)) * v[k];
    return out;
  }

  TrigVecFn apply_adjoint(const TrigVecFn& wfn) const {
    detail::require_compatible(*sys_, wfn, "ResolventWorkspace::apply_adjoint");
    const int da = sys_->A.depth();
    TrigVecFn out(wfn.period(), wfn.depth() + da, wfn.rows());
    for (int m = -da; m <= da; ++m) {
      const SparseMat& blk = a_sparse_[static_cast<std::size_t>(-m + da)];
      if (blk.nonZeros() == 0) continue;
      for (int j = -wfn.depth(); j <= wfn.depth(); ++j) out[m + j] += blk.adjoint() * wfn[j];
    }
    const double w = sys_->omega();
    for (int k = -wfn.depth(); k <= wfn.depth(); ++k) out[k] += (kI * (w * k)) * wfn[k];
    return out;
  }

  /// Hill matrix of sI - L on harmonics -N..N.
  SparseMat hill_matrix(cplx s, int N) const {
    const Index n = sys_->dim();
    const int da = sys_->A.depth();
    const double w = sys_->omega();
    std::vector<Eigen::Triplet<cplx>> trip;
    std::size_t nnz = 0;
    for (const auto& blk : a_sparse_) nnz += static_cast<std::size_t>(blk.nonZeros());
    trip.reserve(static_cast<std::size_t>(2 * N + 1) * (nnz + static_cast<std::size_t>(n)));
    for (int k = -N; k <= N; ++k) {
      const Index row0 = (k + N) * n;
      const cplx diag = s + kI * (w * k);
      for (Index i = 0; i < n; ++i) trip.emplace_back(row0 + i, row0 + i, diag);
      for (int d = -da; d <= da; ++d) {
        const int m = k - d;
        if (m < -N || m > N) continue;
        const Index col0 = (m + N) * n;
        const SparseMat& blk = a_sparse_[static_cast<std::size_t>(d + da)];
        for (Index c = 0; c < blk.outerSize(); ++c)
          for (SparseMat::InnerIterator it(blk, c); it; ++it)
            trip.emplace_back(row0 + it.row(), col0 + it.col(), -it.value());
      }
    }
    const Index dim = (2 * N + 1) * n;
    SparseMat H(dim, dim);
    H.setFromTriplets(trip.begin(), trip.end());
    H.makeCompressed();
    return H;
  }

 private:
  using Lu = Eigen::SparseLU<SparseMat, Eigen::COLAMDOrdering<int>>;

  struct Factorization {
    cplx shift;
    int depth = 0;
    std::unique_ptr<Lu> lu;
    Eigen::VectorXd row_scale;  // row 1-norms of H
    double rcond = 0.0;
  };

  ResolventSolution solve_impl(cplx s, const TrigVecFn& rhs, bool adjoint) {
    detail::require_compatible(*sys_, rhs, adjoint ? "solve_adjoint" : "solve");
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
      throw InvalidArgument("resolvent shift must be finite");
    const int required = sys_->A.depth() + rhs.depth();
    if (depth_ < required) depth_ = required + opts_.extra_harmonics;

    for (int attempt = 0;; ++attempt) {
      const Factorization& f = factor(s, depth_);
      const VectorXc x_rhs = hill_pack(rhs, depth_);
      const VectorXc x =
          adjoint ? VectorXc(f.lu->adjoint().solve(x_rhs)) : VectorXc(f.lu->solve(x_rhs));
      ++stats_.solves;
      TrigVecFn v = hill_unpack(x, sys_->dim(), depth_, sys_->period());
      const double total = v.squared_norm();
      if (!std::isfinite(total)) throw NearSingularShift(s, 0.0);
      const double edge = v[depth_].squaredNorm() + v[-depth_].squaredNorm();
      const double tail = total > 0.0 ? std::sqrt(edge / total) : 0.0;
      const double rhs_norm = l2_norm(rhs);
      const double res = rhs_norm > 0.0 ? spill_norm(v, adjoint) / rhs_norm : 0.0;
      if (tail <= opts_.tail_tol && res <= opts_.residual_tol) {
        stats_.max_tail = std::max(stats_.max_tail, tail);
        return {std::move(v), tail, res, f.rcond, depth_};
      }
      if (attempt >= opts_.max_doublings)
        throw TruncationNotConverged("harmonic truncation not converged at N_h = " +
                                     std::to_string(depth_) + ": tail " + std::to_string(tail) +
                                     ", residual " + std::to_string(res));
      depth_ *= 2;
      ++stats_.doublings;
    }
  }

  /// Norm of the part of A v (or A^* v) that lands outside harmonics -N..N;
  /// the in-window residual is the linear solve's own.
  double spill_norm(const TrigVecFn& v, bool adjoint) const {
    const int N = v.depth();
    const int da = sys_->A.depth();
    double acc = 0.0;
    for (int k = N + 1; k <= N + da; ++k) {
      for (int sign : {1, -1}) {
        const int kk = sign * k;
        VectorXc out = VectorXc::Zero(v.rows());
        for (int d = -da; d <= da; ++d) {
          const int j = kk - d;
          if (j < -N || j > N) continue;
          if (adjoint)
            out += a_sparse_[static_cast<std::size_t>(-d + da)].adjoint() * v[j];
          else
            out += a_sparse_[static_cast<std::size_t>(d + da)] * v[j];
        }
        acc += out.squaredNorm();
      }
    }
    return std::sqrt(acc);
  }

  const Factorization& factor(cplx s, int N) {
    if (cache_ && cache_->shift == s && cache_->depth == N) return *cache_;
    cache_.reset();
    Factorization f;
    f.shift = s;
    f.depth = N;
    const SparseMat H = hill_matrix(s, N);
    f.row_scale = Eigen::VectorXd::Zero(H.rows());
    for (Index c = 0; c < H.outerSize(); ++c)
      for (SparseMat::InnerIterator it(H, c); it; ++it) f.row_scale(it.row()) += std::abs(it.value());
    f.lu = std::make_unique<Lu>();
    f.lu->analyzePattern(H);
    f.lu->factorize(H);
    ++stats_.factorizations;
    if (f.lu->info() != Eigen::Success) throw NearSingularShift(s, 0.0);
    f.rcond = estimate_rcond(*f.lu, f.row_scale);
    stats_.min_rcond = std::min(stats_.min_rcond, f.rcond);
    if (!(f.rcond >= opts_.rcond_min)) throw NearSingularShift(s, f.rcond);
    cache_ = std::move(f);
    return *cache_;
  }

  /// Reciprocal infinity-norm condition estimate of the row-equilibrated Hill
  /// matrix S = D^{-1} H (so ||S||_inf = 1), by Hager-Higham 1-norm estimation
  /// of B = S^{-H} = D H^{-H}.
  static double estimate_rcond(Lu& lu, const Eigen::VectorXd& d) {
    const Index dim = d.size();
    if (dim == 0) return 1.0;
    auto apply_b = [&](const VectorXc& x) -> VectorXc {
      VectorXc y = lu.adjoint().solve(x);
      return d.cast<cplx>().cwiseProduct(y);
    };
    auto apply_bh = [&](const VectorXc& x) -> VectorXc {
      return lu.solve(VectorXc(d.cast<cplx>().cwiseProduct(x)));
    };
    auto csign = [](const VectorXc& y) {
      VectorXc s(y.size());
      for (Index i = 0; i < y.size(); ++i) {
        const double a = std::abs(y(i));
        s(i) = a > 0.0 ? y(i) / a : cplx{1.0, 0.0};
      }
      return s;
    };

    VectorXc x = VectorXc::Constant(dim, cplx{1.0 / static_cast<double>(dim), 0.0});
    VectorXc y = apply_b(x);
    double est = y.lpNorm<1>();
    VectorXc z = apply_bh(csign(y));
    Index j_prev = -1;
    for (int iter = 0; iter < 4; ++iter) {
      Index j = 0;
      z.cwiseAbs().maxCoeff(&j);
      if (j == j_prev) break;
      x.setZero();
      x(j) = 1.0;
      y = apply_b(x);
      const double next = y.lpNorm<1>();
      if (next <= est) break;
      est = next;
      z = apply_bh(csign(y));
      j_prev = j;
    }
    VectorXc alt(dim);
    for (Index i = 0; i < dim; ++i) {
      const double mag = 1.0 + static_cast<double>(i) / static_cast<double>(std::max<Index>(dim - 1, 1));
      alt(i) = (i % 2 == 0) ? mag : -mag;
    }
    est = std::max(est, 2.0 * apply_b(alt).lpNorm<1>() / (3.0 * static_cast<double>(dim)));
    if (!std::isfinite(est) || est <= 0.0) return 0.0;
    return 1.0 / est;
  }

  const LtpSystem* sys_;
  ResolventOptions opts_;
  int base_depth_ = 0;
  int depth_ = 0;
  std::vector<SparseMat> a_sparse_;
  std::optional<Factorization> cache_;
  ResolventStats stats_;
};

}  // namespace ltpmor
