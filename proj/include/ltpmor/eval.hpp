#pragma once

/// \file eval.hpp
/// Validation tools: closed-form modal simulation, an implicit time stepper for
/// small full models, sampled H-infinity errors of LTI extensions, a balanced
/// truncation baseline and two independent Floquet spectra for small systems.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <boost/numeric/odeint.hpp>

#include "ltpmor/rom.hpp"

namespace ltpmor {

// Inputs and grids

/// u(t) = exp(sigma t) sum_m a_m exp(i w m t); w comes from `period`.
struct InputSignal {
  double sigma = -1.0;
  double period = 2.0 * std::numbers::pi;
  std::vector<std::pair<int, cplx>> terms{{0, cplx{1.0, 0.0}}};

  double omega() const { return 2.0 * std::numbers::pi / period; }

  cplx operator()(double t) const {
    cplx acc{};
    for (const auto& [m, a] : terms) acc += a * std::exp(cplx{sigma, omega() * m} * t);
    return acc;
  }

  bool is_zero() const {
    return std::all_of(terms.begin(), terms.end(), [](const auto& tm) { return tm.second == cplx{}; });
  }
};

/// Uniform grid t_i = t_end i / (samples - 1).
inline std::vector<double> uniform_grid(double t_end, int samples) {
  if (!(t_end > 0.0) || samples < 2) throw InvalidArgument("time grid needs t_end > 0 and >= 2 samples");
  std::vector<double> t(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) t[static_cast<std::size_t>(i)] = t_end * i / (samples - 1);
  return t;
}

struct SimResult {
  std::vector<double> t;
  VectorXc y;
  std::string method;
  int steps = 0;             ///< accepted steps (time stepper only)
  int rejected_steps = 0;
};

namespace detail {

inline void require_grid(const std::vector<double>& t) {
  if (t.empty()) throw InvalidArgument("empty time grid");
  if (t.front() < 0.0) throw InvalidArgument("time grid must start at t >= 0");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw InvalidArgument("time grid must be strictly increasing");
}

/// int_0^t exp(lambda (t - tau)) exp(a tau) dtau.
inline cplx exp_convolution(cplx lambda, cplx a, double t) {
  const cplx z = (a - lambda) * t;
  if (std::abs(z) < 0.5) {
    // t exp(lambda t) phi1(z), phi1(z) = sum z^k / (k + 1)!
    cplx term{1.0, 0.0}, phi{1.0, 0.0};
    for (int k = 1; k < 30; ++k) {
      term *= z / static_cast<double>(k + 1);
      phi += term;
      if (std::abs(term) < 1e-17 * std::abs(phi)) break;
    }
    return t * std::exp(lambda * t) * phi;
  }
  return (std::exp(a * t) - std::exp(lambda * t)) / (a - lambda);
}

}  // namespace detail

/// Each mode z_j' = lambda_j z_j + b_r,j(t) u(t), z_j(0) = 0, is integrated in
/// closed form, which is exact for the input class; y = c_r(t)^* z.
inline SimResult simulate_rom(const Rom& rom, const InputSignal& u, const std::vector<double>& t) {
  detail::require_grid(t);
  if (std::abs(u.period - rom.period()) > 1e-12 * rom.period())
    throw InvalidArgument("input modulation period must equal the system period");
  SimResult out{t, VectorXc::Zero(static_cast<Index>(t.size())), "modal-closed-form", 0, 0};
  if (u.is_zero()) return out;
  const double w = rom.omega();
  // b_r,j(t) u(t) = sum_m d_{j,m} exp((sigma + i w m) t)
  std::vector<std::pair<int, VectorXc>> forcing;
  for (int k = -rom.br.depth(); k <= rom.br.depth(); ++k) {
    if (rom.br[k].isZero(0.0)) continue;
    for (const auto& [m, a] : u.terms) {
      const int h = k + m;
      auto it = std::find_if(forcing.begin(), forcing.end(), [h](const auto& f) { return f.first == h; });
      if (it == forcing.end()) {
        forcing.emplace_back(h, VectorXc::Zero(rom.r()));
        it = std::prev(forcing.end());
      }
      it->second += a * rom.br[k];
    }
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = t[i];
    VectorXc z = VectorXc::Zero(rom.r());
    for (const auto& [h, d] : forcing) {
      const cplx a{u.sigma, w * h};
      for (Index j = 0; j < rom.r(); ++j)
        if (d(j) != cplx{}) z(j) += d(j) * detail::exp_convolution(rom.lambdas(j), a, ti);
    }
    out.y(static_cast<Index>(i)) = rom.cr(ti).dot(z);
  }
  return out;
}

/// Full benchmark output through its closed-form Floquet coordinates.
inline SimResult simulate_fom_example(const ExampleGroundTruth& gt, const InputSignal& u,
                                      const std::vector<double>& t) {
  SimResult r = simulate_rom(example_rom(gt), u, t);
  r.method = "floquet-closed-form";
  return r;
}

struct StepperOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h0 = 1e-3;
  int max_steps = 2000000;
};

/// x' = A(t) x + b(t) u(t), x(0) = 0, y = c(t)^* x by the 3-stage Radau IIA
/// method (order 5, L-stable) with step-doubling error control.
/// Intended for n <= 64.
inline SimResult simulate_fom(const LtpSystem& sys, const InputSignal& u, const std::vector<double>& t,
                              const StepperOptions& opt = {}) {
  detail::require_grid(t);
  sys.validate();
  if (sys.dim() > 64) throw InvalidArgument("simulate_fom is limited to n <= 64");
  const Index n = sys.dim();
  const double s6 = std::sqrt(6.0);
  const double c[3] = {(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0};
  const double a[3][3] = {{(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0},
                          {(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0},
                          {(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0}};

  auto step = [&](double t0, const VectorXc& x, double h) {
    MatrixXc M = MatrixXc::Identity(3 * n, 3 * n);
    VectorXc rhs(3 * n);
    for (int i = 0; i < 3; ++i) {
      const double ti = t0 + c[i] * h;
      const MatrixXc Ai = sys.A(ti);
      for (int j = 0; j < 3; ++j) M.block(i * n, j * n, n, n) -= (h * a[i][j]) * Ai;
      rhs.segment(i * n, n) = Ai * x + sys.b(ti) * u(ti);
    }
    const VectorXc K = M.partialPivLu().solve(rhs);
    // stiffly accurate: x_1 = x + h sum_j a_3j K_j
    VectorXc x1 = x;
    for (int j = 0; j < 3; ++j) x1 += (h * a[2][j]) * K.segment(j * n, n);
    return x1;
  };

  SimResult out{t, VectorXc::Zero(static_cast<Index>(t.size())), "radau-iia-5", 0, 0};
  VectorXc x = VectorXc::Zero(n);
  double now = 0.0;
  double h = opt.h0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    while (now < t[i]) {
      if (out.steps + out.rejected_steps > opt.max_steps)
        throw InvalidArgument("simulate_fom: step budget exhausted");
      const double hh = std::min(h, t[i] - now);
      const VectorXc big = step(now, x, hh);
      const VectorXc half = step(now + 0.5 * hh, step(now, x, 0.5 * hh), 0.5 * hh);
      const double scale = opt.atol + opt.rtol * std::max(x.norm(), half.norm());
      const double err = (half - big).norm() / (31.0 * scale);
      if (err <= 1.0 || hh < 1e-12) {
        now += hh;
        x = half + (half - big) / 31.0;
        ++out.steps;
      } else {
        ++out.rejected_steps;
      }
      const double fac = err > 0.0 ? 0.9 * std::pow(err, -1.0 / 6.0) : 2.0;
      h = hh * std::clamp(fac, 0.2, 2.0);
      if (now >= t[i] - 1e-14 * std::max(1.0, t[i])) now = t[i];
    }
    out.y(static_cast<Index>(i)) = sys.c(t[i]).dot(x);
  }
  return out;
}

struct OutputError {
  double max_rel = 0.0;
  double mean_rel = 0.0;
  Eigen::VectorXd rel;
};

/// |y - y_r| / max(|y|, 1e-3 max_t |y|) pointwise, with its max and mean.
inline OutputError pointwise_relative_error(const VectorXc& y, const VectorXc& yr) {
  if (y.size() != yr.size() || y.size() == 0) throw DimensionMismatch("output series lengths differ");
  const double floor = 1e-3 * y.cwiseAbs().maxCoeff();
  OutputError e;
  e.rel.resize(y.size());
  double sum = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double den = std::max(std::abs(y(i)), floor);
    const double r = den > 0.0 ? std::abs(y(i) - yr(i)) / den : 0.0;
    e.rel(i) = r;
    e.max_rel = std::max(e.max_rel, r);
    sum += r;
  }
  e.mean_rel = sum / static_cast<double>(y.size());
  return e;
}

// Frequency-domain error

struct FrequencyGrid {
  double nu_min = 1e-6;
  double nu_max = 1e7;
  int points = 2000;
  bool both_signs = true;
  int refine_iterations = 60;
};

struct HinfResult {
  double value = 0.0;
  double nu_peak = 0.0;
  std::vector<double> nu;
  std::vector<double> sigma;  ///< sampled sigma_max on the grid
};

inline std::vector<double> frequency_samples(const FrequencyGrid& g) {
  std::vector<double> nu;
  const auto pos = logspace(std::log10(g.nu_min), std::log10(g.nu_max), g.points);
  if (g.both_signs)
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) nu.push_back(-*it);
  nu.push_back(0.0);
  nu.insert(nu.end(), pos.begin(), pos.end());
  return nu;
}

/// max over i nu of sigma_max(F(i nu)), sampled then refined by golden-section
/// search between the neighbours of the best sample.
template <class F>
HinfResult sampled_sigma_max(F&& transfer, const FrequencyGrid& g) {
  auto smax = [&](double nu) {
    const MatrixXc H = transfer(cplx{0.0, nu});
    return Eigen::JacobiSVD<MatrixXc>(H).singularValues()(0);
  };
  HinfResult res;
  res.nu = frequency_samples(g);
  res.sigma.reserve(res.nu.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < res.nu.size(); ++i) {
    res.sigma.push_back(smax(res.nu[i]));
    if (res.sigma[i] > res.sigma[best]) best = i;
  }
  res.value = res.sigma[best];
  res.nu_peak = res.nu[best];
  double lo = res.nu[best > 0 ? best - 1 : 0];
  double hi = res.nu[std::min(best + 1, res.nu.size() - 1)];
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = smax(x1), f2 = smax(x2);
  for (int it = 0; it < g.refine_iterations && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = smax(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = smax(x2);
    }
  }
  for (auto [x, f] : {std::pair{x1, f1}, std::pair{x2, f2}})
    if (f > res.value) {
      res.value = f;
      res.nu_peak = x;
    }
  return res;
}

inline HinfResult hinf_norm(const LtiExtension& ext, const FrequencyGrid& g = {}) {
  return sampled_sigma_max([&](cplx s) { return eval_hext(ext, s); }, g);
}

inline HinfResult sampled_hinf_error(const LtiExtension& full, const LtiExtension& red,
                                     const FrequencyGrid& g = {}) {
  if (full.K != red.K) throw InvalidArgument("sampled_hinf_error: extensions must share K");
  return sampled_sigma_max([&](cplx s) { return MatrixXc(eval_hext(full, s) - eval_hext(red, s)); }, g);
}

// Balanced truncation

namespace detail {

/// L with L L^* = G for Hermitian positive semidefinite G, dropping
/// eigenvalues below 1e-15 of the largest.
inline MatrixXc psd_factor(const MatrixXc& G) {
  const MatrixXc H = 0.5 * (G + G.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(H);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > 1e-15 * top) keep.push_back(i);
  MatrixXc L(G.rows(), static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c)
    L.col(static_cast<Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
  return L;
}

}  // namespace detail

/// Square-root balanced truncation of z' = Lambda z + Bhat u, y = Chat^* z.
/// The balancing is computed once; reduce() truncates to any order.
class BalancedTruncator {
 public:
  explicit BalancedTruncator(const LtiExtension& full) : full_(full) {
    const Index n = full.r();
    for (Index j = 0; j < n; ++j)
      if (!(full.lambdas(j).real() < 0.0))
        throw UnstableMode("balanced truncation needs Re lambda < 0 for every pole");
    const MatrixXc BB = full.Bhat * full.Bhat.adjoint();
    const MatrixXc CC = full.Chat * full.Chat.adjoint();
    MatrixXc P(n, n), Q(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        P(i, j) = -BB(i, j) / (full.lambdas(i) + std::conj(full.lambdas(j)));
        Q(i, j) = -CC(i, j) / (std::conj(full.lambdas(i)) + full.lambdas(j));
      }
    Lp_ = detail::psd_factor(P);
    Lq_ = detail::psd_factor(Q);
    Eigen::BDCSVD<MatrixXc> svd(Lq_.adjoint() * Lp_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    hsv_ = svd.singularValues();
    U_ = svd.matrixU();
    V_ = svd.matrixV();
  }

  const Eigen::VectorXd& hankel_singular_values() const noexcept { return hsv_; }

  /// Order-r reduction, diagonalized so it is again an LTI extension.
  LtiExtension reduce(Index r) const {
    if (r < 1 || r > full_.r()) throw InvalidArgument("balanced truncation order out of range");
    const Index rr = std::min<Index>(r, (hsv_.array() > 0.0).count());
    const Eigen::VectorXd isq = hsv_.head(rr).cwiseSqrt().cwiseInverse();
    const MatrixXc T = Lp_ * V_.leftCols(rr) * isq.asDiagonal();
    const MatrixXc Wm = Lq_ * U_.leftCols(rr) * isq.asDiagonal();
    const MatrixXc Ar = Wm.adjoint() * full_.lambdas.asDiagonal() * T;
    const MatrixXc Br = Wm.adjoint() * full_.Bhat;
    const MatrixXc Cr = T.adjoint() * full_.Chat;  // output map Cr^*
    Eigen::ComplexEigenSolver<MatrixXc> es(Ar);
    const MatrixXc X = es.eigenvectors();
    LtiExtension red;
    red.K = full_.K;
    red.lambdas = es.eigenvalues();
    red.Bhat = X.partialPivLu().solve(Br);
    red.Chat = X.adjoint() * Cr;
    return red;
  }

 private:
  LtiExtension full_;
  MatrixXc Lp_, Lq_, U_, V_;
  Eigen::VectorXd hsv_;
};

inline LtiExtension balanced_truncation_baseline(const LtiExtension& full, Index r) {
  return BalancedTruncator(full).reduce(r);
}

// Small-n Floquet oracles

struct FloquetOracleOptions {
  int hill_depth = -1;          ///< harmonics of the dense Hill matrix; 4 (depth(A) + 8) when negative
  double ode_tol = 1e-13;
  double defective_cond = 1e10;
};

struct FloquetOracle {
  VectorXc hill_exponents;       ///< canonical, from the dense Hill matrix
  VectorXc monodromy_exponents;  ///< canonical, log(eig Phi(T)) / T
  std::vector<Eigentriple> triples;  ///< from the Hill eigenvectors, normalized
  double agreement = 0.0;        ///< max family distance between the two spectra
  double eigvec_condition = 0.0;
  bool defective = false;
  int hill_depth = 0;
};

/// Phi(T) for Phi' = A(t) Phi, Phi(0) = I by adaptive Dormand-Prince stepping.
inline MatrixXc monodromy_matrix(const LtpSystem& sys, double tol = 1e-13) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<cplx>;
  const Index n = sys.dim();
  State x(static_cast<std::size_t>(n * n), cplx{});
  for (Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i * n + i)] = 1.0;
  auto rhs = [&](const State& s, State& ds, double t) {
    const MatrixXc A = sys.A(t);
    Eigen::Map<const MatrixXc> S(s.data(), n, n);
    Eigen::Map<MatrixXc> D(ds.data(), n, n);
    D.noalias() = A * S;
  };
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_adaptive(stepper, rhs, x, 0.0, sys.period(), sys.period() / 200.0);
  return Eigen::Map<MatrixXc>(x.data(), n, n);
}

/// Full spectrum of L for a small system by two independent routes: the
/// dense Hill matrix eigendecomposition and the monodromy matrix.
inline FloquetOracle dense_floquet_oracle(const LtpSystem& sys, const FloquetOracleOptions& opt = {}) {
  sys.validate();
  const Index n = sys.dim();
  if (n > 16) throw InvalidArgument("dense_floquet_oracle is limited to n <= 16");
  const double w = sys.omega();
  FloquetOracle out;
  const int N = opt.hill_depth >= 0 ? opt.hill_depth : 4 * (sys.A.depth() + 8);
  out.hill_depth = N;

  // (a) L itself on harmonics -N..N: block (k, m) = -i w k delta_km + A_{k-m}
  const Index dim = (2 * N + 1) * n;
  MatrixXc L = MatrixXc::Zero(dim, dim);
  for (int k = -N; k <= N; ++k) {
    L.block((k + N) * n, (k + N) * n, n, n).diagonal().array() -= kI * (w * k);
    for (int m = -N; m <= N; ++m)
      if (std::abs(k - m) <= sys.A.depth()) L.block((k + N) * n, (m + N) * n, n, n) += sys.A[k - m];
  }
  Eigen::ComplexEigenSolver<MatrixXc> es(L);
  if (es.info() != Eigen::Success) throw DefectiveSpectrum("dense Hill eigensolver failed");
  const MatrixXc& V = es.eigenvectors();

  // candidates in the canonical strip, ranked by energy outside |k| <= N / 2
  std::vector<std::pair<double, Index>> cand;
  for (Index i = 0; i < dim; ++i) {
    const cplx lam = es.eigenvalues()(i);
    if (canonicalize_lambda(lam, w).k != 0) continue;
    double edge = 0.0;
    for (int k = -N; k <= N; ++k)
      if (std::abs(k) > N / 2) edge += V.col(i).segment((k + N) * n, n).squaredNorm();
    cand.emplace_back(edge / V.col(i).squaredNorm(), i);
  }
  if (static_cast<Index>(cand.size()) < n)
    throw DefectiveSpectrum("dense Hill oracle found fewer than n eigenvalues in the canonical strip");
  std::sort(cand.begin(), cand.end());
  cand.resize(static_cast<std::size_t>(n));

  MatrixXc Vsel(dim, n);
  out.hill_exponents.resize(n);
  for (Index j = 0; j < n; ++j) {
    Vsel.col(j) = V.col(cand[static_cast<std::size_t>(j)].second);
    out.hill_exponents(j) = es.eigenvalues()(cand[static_cast<std::size_t>(j)].second);
  }
  // left vectors: rows of V^{-1} restricted to the selection
  const Eigen::PartialPivLU<MatrixXc> vlu(V);
  out.eigvec_condition = 1.0 / vlu.rcond();
  out.defective = !(out.eigvec_condition < opt.defective_cond);
  const MatrixXc Vinv = vlu.inverse();

  ResolventWorkspace ws(sys);
  for (Index j = 0; j < n; ++j) {
    const Index i = cand[static_cast<std::size_t>(j)].second;
    const TrigVecFn v = hill_unpack(Vsel.col(j), n, N, sys.period());
    const TrigVecFn u = hill_unpack(Vinv.row(i).adjoint(), n, N, sys.period());
    try {
      out.triples.push_back(make_triple(ws, out.hill_exponents(j), v, u));
    } catch (const NormalizationError&) {
      out.defective = true;
    }
  }

  // (b) monodromy
  const MatrixXc Phi = monodromy_matrix(sys, opt.ode_tol);
  Eigen::ComplexEigenSolver<MatrixXc> mes(Phi, false);
  out.monodromy_exponents.resize(n);
  for (Index j = 0; j < n; ++j)
    out.monodromy_exponents(j) = canonicalize_lambda(std::log(mes.eigenvalues()(j)) / sys.period(), w).lambda;

  double worst = 0.0;
  for (Index j = 0; j < n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
      best = std::min(best, family_distance(out.hill_exponents(j), out.monodromy_exponents(i), w));
    worst = std::max(worst, best);
  }
  out.agreement = worst;
  return out;
}

/// Distance from lambda to the nearest member of any oracle family.
inline double distance_to_spectrum(cplx lambda, const VectorXc& spectrum, double omega) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < spectrum.size(); ++i)
    best = std::min(best, family_distance(lambda, spectrum(i), omega));
  return best;
}

}  // namespace ltpmor
