#pragma once

/// \file rom.hpp
/// Port-isolated reduced models from eigentriples and their lifted LTI
/// extension.
///
/// With P_r = [p_1 .. p_r], Q_r = [q_1 .. q_r] and M_r = Q_r(0)^* P_r(0) the
/// reduced model is
///     z' = Lambda_r z + b_r(t) u,   b_r = M_r^{-1} Q_r(t)^* b(t),
///     y  = c_r(t)^* z,              c_r = P_r(t)^* c(t).
/// Its LTI extension stacks the harmonics -K..K of b_r and c_r as rows of
/// Bhat and Chat; H_ext(s) = Chat^* (sI - Lambda_r)^{-1} Bhat.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ltpmor/dpa.hpp"
#include "ltpmor/systems.hpp"
#include "ltpmor/trigfun_json.hpp"

namespace ltpmor {

struct PartialFloquet {
  VectorXc lambdas;
  std::vector<TrigVecFn> P;
  std::vector<TrigVecFn> Q;
  MatrixXc Mr;  ///< Q_r(0)^* P_r(0)

  Index r() const noexcept { return lambdas.size(); }
  double period() const { return P.front().period(); }
};

inline MatrixXc gram_at(const std::vector<TrigVecFn>& Q, const std::vector<TrigVecFn>& P, double t) {
  const auto r = static_cast<Index>(P.size());
  MatrixXc M(r, r);
  for (Index i = 0; i < r; ++i) {
    const VectorXc qi = Q[static_cast<std::size_t>(i)](t);
    for (Index j = 0; j < r; ++j) M(i, j) = qi.dot(P[static_cast<std::size_t>(j)](t));
  }
  return M;
}

inline PartialFloquet make_partial_floquet(const std::vector<Eigentriple>& triples) {
  if (triples.empty()) throw InvalidArgument("partial Floquet data needs at least one eigentriple");
  PartialFloquet pf;
  pf.lambdas.resize(static_cast<Index>(triples.size()));
  for (std::size_t j = 0; j < triples.size(); ++j) {
    const Eigentriple& t = triples[j];
    if (t.p.period() != triples.front().p.period() || t.q.period() != t.p.period())
      throw PeriodMismatch("eigentriples must share one period");
    if (t.p.rows() != triples.front().p.rows() || t.q.rows() != t.p.rows())
      throw DimensionMismatch("eigentriples must share one state dimension");
    pf.lambdas(static_cast<Index>(j)) = t.lambda;
    pf.P.push_back(t.p);
    pf.Q.push_back(t.q);
  }
  pf.Mr = gram_at(pf.Q, pf.P, 0.0);
  return pf;
}

/// max over `samples` uniform times of ||Q_r(t)^* P_r(t) - M_r||_max.
inline double gram_constancy_defect(const PartialFloquet& pf, int samples = 64) {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = pf.period() * i / samples;
    worst = std::max(worst, (gram_at(pf.Q, pf.P, t) - pf.Mr).cwiseAbs().maxCoeff());
  }
  return worst;
}

struct Rom {
  VectorXc lambdas;  ///< diagonal of R_r
  TrigVecFn br;
  TrigVecFn cr;
  double mr_condition = 1.0;  ///< 2-norm condition number of M_r

  Index r() const noexcept { return lambdas.size(); }
  double period() const { return br.period(); }
  double omega() const { return br.omega(); }
};

/// Scalar functions f_j(t) = x_j(t)^* y(t) stacked as an r-vector function.
inline TrigVecFn stacked_dot(const std::vector<TrigVecFn>& xs, const TrigVecFn& y) {
  std::vector<TrigVecFn> parts;
  int depth = 0;
  for (const auto& x : xs) {
    parts.push_back(pointwise_dot(x, y));
    depth = std::max(depth, parts.back().depth());
  }
  TrigVecFn out(y.period(), depth, static_cast<Index>(xs.size()));
  for (std::size_t j = 0; j < parts.size(); ++j)
    for (int k = -parts[j].depth(); k <= parts[j].depth(); ++k)
      out[k](static_cast<Index>(j)) = parts[j][k](0);
  return out;
}

inline Rom build_rom(const PartialFloquet& pf, const LtpSystem& sys) {
  if (pf.r() == 0) throw InvalidArgument("build_rom: empty partial Floquet data");
  if (pf.P.front().rows() != sys.dim())
    throw DimensionMismatch("build_rom: eigenfunction dimension differs from system order");
  if (pf.period() != sys.period()) throw PeriodMismatch("build_rom: period differs from the system");
  const Eigen::JacobiSVD<MatrixXc> svd(pf.Mr);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > 1e-14 * sv(0)))
    throw SingularMr("M_r = Q_r(0)^* P_r(0) is singular");
  Rom rom;
  rom.lambdas = pf.lambdas;
  rom.mr_condition = sv(0) / sv(sv.size() - 1);
  const Eigen::PartialPivLU<MatrixXc> lu(pf.Mr);
  TrigVecFn qb = stacked_dot(pf.Q, sys.b);
  for (int k = -qb.depth(); k <= qb.depth(); ++k) qb[k] = lu.solve(qb[k]);
  rom.br = trim(qb).f;
  rom.cr = trim(stacked_dot(pf.P, sys.c)).f;
  return rom;
}

struct LtiExtension {
  VectorXc lambdas;
  MatrixXc Bhat;  ///< row j: harmonics -K..K of b_r,j
  MatrixXc Chat;  ///< row j: harmonics -K..K of c_r,j
  int K = 0;

  Index r() const noexcept { return lambdas.size(); }

  LtiExtension subset(const std::vector<Index>& rows) const {
    LtiExtension out;
    out.K = K;
    out.lambdas.resize(static_cast<Index>(rows.size()));
    out.Bhat.resize(static_cast<Index>(rows.size()), Bhat.cols());
    out.Chat.resize(static_cast<Index>(rows.size()), Chat.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto ii = static_cast<Index>(i);
      out.lambdas(ii) = lambdas(rows[i]);
      out.Bhat.row(ii) = Bhat.row(rows[i]);
      out.Chat.row(ii) = Chat.row(rows[i]);
    }
    return out;
  }
};

namespace detail {

inline MatrixXc harmonic_rows(const TrigVecFn& f, int K, double rel_tol, const char* what) {
  const double ref = l2_norm(f);
  for (int k = K + 1; k <= f.depth(); ++k)
    if (f[k].norm() > rel_tol * ref || f[-k].norm() > rel_tol * ref)
      throw TruncatedPorts(std::string(what) + " has harmonic " + std::to_string(k) +
                           " beyond K = " + std::to_string(K));
  MatrixXc out(f.rows(), 2 * K + 1);
  for (int k = -K; k <= K; ++k) out.col(k + K) = f.at(k);
  return out;
}

}  // namespace detail

/// Fails with TruncatedPorts when b_r or c_r carries a harmonic beyond K above
/// 1e-10 relative.
inline LtiExtension build_lti_extension(const Rom& rom, int K) {
  if (K < 0) throw InvalidArgument("build_lti_extension: K must be >= 0");
  return {rom.lambdas, detail::harmonic_rows(rom.br, K, 1e-10, "b_r"),
          detail::harmonic_rows(rom.cr, K, 1e-10, "c_r"), K};
}

inline LtiExtension build_lti_extension(const PartialFloquet& pf, const LtpSystem& sys, int K) {
  return build_lti_extension(build_rom(pf, sys), K);
}

/// Extension of the full benchmark from its closed-form Floquet factors.
inline LtiExtension example_extension(const ExampleGroundTruth& gt, int K = 1) {
  return {gt.lambdas.cast<cplx>(), detail::harmonic_rows(gt.bhat, K, 0.0, "bhat"),
          detail::harmonic_rows(gt.chat, K, 0.0, "chat"), K};
}

/// Reduced model made of the closed-form Floquet data (M_r = I).
inline Rom example_rom(const ExampleGroundTruth& gt) {
  return {gt.lambdas.cast<cplx>(), gt.bhat, gt.chat, 1.0};
}

/// H_ext(s) = sum_j Chat_j^* Bhat_j / (s - lambda_j).
inline MatrixXc eval_hext(const LtiExtension& ext, cplx s) {
  const Index m = 2 * ext.K + 1;
  MatrixXc H = MatrixXc::Zero(m, m);
  for (Index j = 0; j < ext.r(); ++j) {
    const cplx d = s - ext.lambdas(j);
    if (d == cplx{})
      throw PoleHit("eval_hext: s coincides with pole " + std::to_string(j));
    H.noalias() += (ext.Chat.row(j).adjoint() * ext.Bhat.row(j)) / d;
  }
  return H;
}

struct DominanceEntry {
  Index index = 0;  ///< row in the extension
  cplx lambda;
  double degdom_hext = 0.0;  ///< ||Chat_j||_2 ||Bhat_j||_2 / |Re lambda_j|
  double degdom_g = 0.0;     ///< ||Chat_j||_2 ||Bhat_j||_inf / |Re lambda_j|
};

/// Sorted by degdom_hext, largest first; ties keep the extension order.
inline std::vector<DominanceEntry> dominance_table(const LtiExtension& ext) {
  std::vector<DominanceEntry> out;
  for (Index j = 0; j < ext.r(); ++j) {
    const double re = std::abs(ext.lambdas(j).real());
    if (re == 0.0) throw ImaginaryAxisPole("pole " + std::to_string(j) + " lies on the imaginary axis");
    const double cn = ext.Chat.row(j).norm();
    out.push_back({j, ext.lambdas(j), cn * ext.Bhat.row(j).norm() / re,
                   cn * ext.Bhat.row(j).cwiseAbs().maxCoeff() / re});
  }
  std::stable_sort(out.begin(), out.end(), [](const DominanceEntry& a, const DominanceEntry& b) {
    return a.degdom_hext > b.degdom_hext;
  });
  return out;
}

/// Keeps the `keep` most dominant poles (by degdom_hext).
inline LtiExtension dominant_truncation(const LtiExtension& ext, Index keep) {
  if (keep < 0 || keep > ext.r()) throw InvalidArgument("dominant_truncation: keep out of range");
  const auto table = dominance_table(ext);
  std::vector<Index> rows;
  for (Index i = 0; i < keep; ++i) rows.push_back(table[static_cast<std::size_t>(i)].index);
  return ext.subset(rows);
}

/// sum over the dropped poles of ||Theta_j||_2 / |Re lambda_j|.
inline double truncation_error_bound(const LtiExtension& ext, Index keep) {
  if (keep < 0 || keep > ext.r()) throw InvalidArgument("truncation_error_bound: keep out of range");
  const auto table = dominance_table(ext);
  double acc = 0.0;
  for (auto i = static_cast<std::size_t>(keep); i < table.size(); ++i) acc += table[i].degdom_hext;
  return acc;
}

// JSON artifacts

namespace detail {

inline json complex_vector_to_json(const VectorXc& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

inline json complex_matrix_to_json(const MatrixXc& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(complex_vector_to_json(m.row(i).transpose()));
  return out;
}

inline VectorXc complex_vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
  VectorXc v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = complex_from_json(j[i], what);
  return v;
}

}  // namespace detail

inline json to_json(const PartialFloquet& pf) {
  json P = json::array(), Q = json::array();
  for (const auto& p : pf.P) P.push_back(to_json(p));
  for (const auto& q : pf.Q) Q.push_back(to_json(q));
  return {{"r", pf.r()},
          {"period", pf.period()},
          {"lambdas", detail::complex_vector_to_json(pf.lambdas)},
          {"Mr", detail::complex_matrix_to_json(pf.Mr)},
          {"P", P},
          {"Q", Q}};
}

inline PartialFloquet partial_floquet_from_json(const json& j) {
  const char* what = "partial_floquet";
  const VectorXc lambdas = detail::complex_vector_from_json(detail::require_field(j, "lambdas", what), what);
  const json& P = detail::require_field(j, "P", what);
  const json& Q = detail::require_field(j, "Q", what);
  if (!P.is_array() || !Q.is_array() || P.size() != static_cast<std::size_t>(lambdas.size()) ||
      Q.size() != P.size())
    throw ParseError("partial_floquet: \"P\" and \"Q\" must list one function per eigenvalue");
  std::vector<Eigentriple> triples;
  for (std::size_t i = 0; i < P.size(); ++i) {
    Eigentriple t;
    t.lambda = lambdas(static_cast<Index>(i));
    t.p = trig_vec_from_json(P[i], "partial_floquet.P");
    t.q = trig_vec_from_json(Q[i], "partial_floquet.Q");
    triples.push_back(std::move(t));
  }
  return make_partial_floquet(triples);
}

inline json to_json(const LtiExtension& ext) {
  return {{"K", ext.K},
          {"lambdas", detail::complex_vector_to_json(ext.lambdas)},
          {"Bhat", detail::complex_matrix_to_json(ext.Bhat)},
          {"Chat", detail::complex_matrix_to_json(ext.Chat)}};
}

inline json to_json(const Rom& rom) {
  return {{"r", rom.r()},
          {"period", rom.period()},
          {"lambdas", detail::complex_vector_to_json(rom.lambdas)},
          {"mr_condition", rom.mr_condition},
          {"br", to_json(rom.br)},
          {"cr", to_json(rom.cr)}};
}

inline Rom rom_from_json(const json& j) {
  const char* what = "rom";
  Rom rom;
  rom.lambdas = detail::complex_vector_from_json(detail::require_field(j, "lambdas", what), what);
  rom.br = trig_vec_from_json(detail::require_field(j, "br", what), "rom.br");
  rom.cr = trig_vec_from_json(detail::require_field(j, "cr", what), "rom.cr");
  if (j.contains("mr_condition")) rom.mr_condition = detail::require_number<double>(j, "mr_condition", what);
  if (rom.br.rows() != rom.r() || rom.cr.rows() != rom.r())
    throw ValidationError("rom: port dimensions differ from the number of eigenvalues");
  if (rom.br.period() != rom.cr.period()) throw ValidationError("rom: br and cr periods differ");
  return rom;
}

}  // namespace ltpmor
