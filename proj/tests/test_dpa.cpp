#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "ltpmor/dpa.hpp"
#include "ltpmor/eval.hpp"
#include "support/fixtures.hpp"

using namespace ltpmor;
using ltpmor::fixtures::random_system;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

LtpSystem lti(const VectorXc& diag, const VectorXc& b, const VectorXc& c) {
  return {TrigMatFn::constant(kTwoPi, MatrixXc(diag.asDiagonal())), TrigVecFn::constant(kTwoPi, b),
          TrigVecFn::constant(kTwoPi, c)};
}

LtpSystem lti_two_modes() { return lti(Eigen::Vector2cd(-1.0, -2.0), VectorXc::Ones(2), VectorXc::Ones(2)); }

void expect_triple_invariants(const ResolventWorkspace& ws, const Eigentriple& t, double tol) {
  EXPECT_LT(right_residual(ws, t.lambda, t.p), tol);
  EXPECT_LT(left_residual(ws, t.lambda, t.q), tol);
  EXPECT_NEAR(l2_norm(t.p), 1.0, 1e-12);
  EXPECT_LT(std::abs(t.q(0.0).dot(t.p(0.0)) - 1.0), 1e-12);
  EXPECT_LT(biorthogonality_defect(t), 1e-8);
}

}  // namespace

TEST(Canonicalize, Examples) {
  const double w = 1.7;
  auto c = canonicalize_lambda({-1.0, 0.0}, w);
  EXPECT_EQ(c.k, 0);
  EXPECT_EQ(c.lambda, cplx(-1.0, 0.0));
  c = canonicalize_lambda({-1.0, w}, w);
  EXPECT_EQ(c.k, 1);
  EXPECT_NEAR(std::abs(c.lambda - cplx(-1.0, 0.0)), 0.0, 1e-15);
  c = canonicalize_lambda({-1.0, w / 2}, w);
  EXPECT_EQ(c.k, 0);
  EXPECT_EQ(c.lambda, cplx(-1.0, w / 2));
  c = canonicalize_lambda({-1.0, -w / 2}, w);
  EXPECT_EQ(c.k, -1);
  EXPECT_NEAR(c.lambda.imag(), w / 2, 1e-15);
  EXPECT_THROW(canonicalize_lambda(1.0, 0.0), InvalidArgument);
}

TEST(Canonicalize, ImaginaryPartInHalfOpenStrip) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ud(-40.0, 40.0);
  for (int i = 0; i < 200; ++i) {
    const cplx lam{ud(rng), ud(rng)};
    const auto c = canonicalize_lambda(lam, 2.5);
    EXPECT_GT(c.lambda.imag(), -1.25);
    EXPECT_LE(c.lambda.imag(), 1.25);
    EXPECT_NEAR(std::abs(c.lambda + kI * (2.5 * c.k) - lam), 0.0, 1e-12);
  }
}

TEST(Canonicalize, TripleKeepsNormalization) {
  std::mt19937_64 rng(9);
  const auto sys = random_system(rng, {.n = 3, .depth_a = 1});
  ResolventWorkspace ws(sys);
  auto t = dpa_iterate(ws, {-0.5, 0.2}).triple;
  Eigentriple moved = t;
  moved.lambda += kI * (3.0 * sys.omega());
  moved.p = phase_shift(t.p, 3);
  moved.q = phase_shift(t.q, 3);
  const auto back = canonicalize(moved, sys.omega());
  EXPECT_LT(std::abs(back.lambda - canonicalize_lambda(t.lambda, sys.omega()).lambda), 1e-12);
  EXPECT_LT(right_residual(ws, back.lambda, back.p), 1e-8);
  EXPECT_LT(biorthogonality_defect(back), 1e-8);
}

TEST(Dpa, LtiConvergesToNearestPole) {
  const auto sys = lti_two_modes();
  ResolventWorkspace ws(sys);
  const auto r = dpa_iterate(ws, -0.9);
  EXPECT_TRUE(r.trace.converged);
  // three Newton updates reach the pole; the residual of v_k certifies it one solve later
  ASSERT_GE(r.trace.shifts.size(), 4u);
  EXPECT_LT(std::abs(r.trace.shifts[3] + 1.0), 1e-8);
  EXPECT_LE(r.trace.iterations, 4);
  EXPECT_LT(std::abs(r.triple.lambda + 1.0), 1e-10);
  const VectorXc p0 = r.triple.p[0];
  EXPECT_NEAR(std::abs(p0(0)), 1.0, 1e-10);
  EXPECT_LT(std::abs(p0(1)), 1e-10);
  EXPECT_EQ(r.triple.p.depth(), 0);
  expect_triple_invariants(ws, r.triple, 1e-8);
}

TEST(Dpa, LtiFixedPointIsStationaryOfInverseGain) {
  // brute force: 1 / |g(s)| on a fine real grid around the start has its
  // minimum at the pole DPA returns
  const auto sys = lti_two_modes();
  ResolventWorkspace ws(sys);
  const auto r = dpa_iterate(ws, -1.3);
  double best_s = 0.0, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 4000; ++i) {
    const double s = -1.6 + 1.2 * i / 4000.0;
    const cplx g = 1.0 / (s + 1.0) + 1.0 / (s + 2.0);
    if (std::isfinite(std::abs(g)) && 1.0 / std::abs(g) < best) best = 1.0 / std::abs(g), best_s = s;
  }
  EXPECT_NEAR(r.triple.lambda.real(), best_s, 1e-3);
}

TEST(Dpa, ExactEigenvalueIsFixedPoint) {
  const auto sys = lti_two_modes();
  ResolventWorkspace ws(sys);
  const auto r = dpa_iterate(ws, -2.0);
  EXPECT_EQ(r.trace.iterations, 1);
  EXPECT_GE(r.trace.perturbations, 1);
  EXPECT_LT(std::abs(r.triple.lambda + 2.0), 1e-8);

  const auto ex = build_example({20, 10, -4.0, 0.0, 0.5, 1.5});
  ResolventWorkspace wx(ex.system);
  const double lam = ex.truth.spectrum_right.back();
  const auto e = dpa_iterate(wx, lam);
  EXPECT_EQ(e.trace.iterations, 1);
  EXPECT_LT(std::abs(e.triple.lambda - lam), 1e-8);
}

TEST(Dpa, BenchmarkFromPoorGuessFindsAFamilyMemberOtherThanRightmost) {
  const auto ex = build_example({});
  ResolventWorkspace ws(ex.system);
  const auto r = dpa_iterate(ws, -0.1);
  ASSERT_TRUE(r.trace.converged);
  EXPECT_EQ(r.K, 1);
  const VectorXc truth = ex.truth.lambdas.cast<cplx>();
  EXPECT_LT(distance_to_spectrum(r.triple.lambda, truth, ex.system.omega()), 1e-6 * std::abs(r.triple.lambda));
  EXPECT_GT(family_distance(r.triple.lambda, -1e-4, ex.system.omega()), 1e-6);
  expect_triple_invariants(ws, r.triple, 1e-8);
}

TEST(Dpa, RandomSystemsMatchDenseOracle) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 3; ++rep) {
    const auto sys = random_system(rng, {.n = 4, .depth_a = 1 + rep % 2, .decay_lo = 0.1, .decay_hi = 1.2});
    const auto orc = dense_floquet_oracle(sys);
    ResolventWorkspace ws(sys);
    const auto r = dpa_iterate(ws, {-0.05, 0.1});
    EXPECT_LT(distance_to_spectrum(r.triple.lambda, orc.hill_exponents, sys.omega()), 1e-6);
    expect_triple_invariants(ws, r.triple, 1e-8);
  }
}

TEST(Dpa, PhaseCovariantOnBenchmark) {
  const auto ex = build_example({20, 10, -4.0, 0.0, 0.5, 1.5});
  const double w = ex.system.omega();
  ResolventWorkspace ws(ex.system);
  const cplx s0{-0.4, 0.1};
  const auto a = dpa_iterate(ws, s0);
  const auto b = dpa_iterate(ws, s0 + kI * (2.0 * w));
  EXPECT_LT(family_distance(a.triple.lambda, b.triple.lambda, w), 1e-8);
}

TEST(Dpa, MaxIterCarriesTrace) {
  std::mt19937_64 rng(5);
  const auto sys = random_system(rng, {.n = 4, .depth_a = 2});
  ResolventWorkspace ws(sys);
  try {
    dpa_iterate(ws, {3.0, 7.0}, {.tol = 1e-8, .max_iter = 1});
    FAIL() << "expected MaxIterExceeded";
  } catch (const MaxIterExceeded& e) {
    EXPECT_EQ(e.trace().iterations, 1);
    EXPECT_EQ(e.trace().shifts.size(), 1u);
    EXPECT_FALSE(e.trace().converged);
    EXPECT_TRUE(std::isfinite(e.trace().residuals.front()));
    EXPECT_STREQ(e.kind(), "MaxIterExceeded");
  }
}

TEST(Dpa, BreakdownWhenPortsSeeNoMode) {
  const auto sys = lti(Eigen::Vector2cd(-1.0, -2.0), Eigen::Vector2cd(1.0, 0.0), Eigen::Vector2cd(0.0, 1.0));
  ResolventWorkspace ws(sys);
  EXPECT_THROW(dpa_iterate(ws, -0.5), BreakdownAtShift);
}

TEST(Dpa, RejectsBadOptions) {
  const auto sys = lti_two_modes();
  ResolventWorkspace ws(sys);
  EXPECT_THROW(dpa_iterate(ws, -0.5, {.tol = 0.0}), InvalidArgument);
  EXPECT_THROW(dpa_iterate(ws, -0.5, {.tol = 1e-8, .max_iter = 0}), InvalidArgument);
}

TEST(Dpa, RefinementNeverWorsensResiduals) {
  std::mt19937_64 rng(31);
  const auto sys = random_system(rng, {.n = 5, .depth_a = 2});
  ResolventWorkspace ws(sys);
  const auto raw = dpa_iterate(ws, {-0.3, 0.0}, {.tol = 1e-6, .max_iter = 50, .K = -1, .refine = false});
  DpaTrace trace;
  const auto polished = refine_triple(ws, raw.triple, trace);
  EXPECT_EQ(trace.refinement_solves, 2);
  EXPECT_LE(std::max(polished.residual, polished.left_residual),
            std::max(raw.triple.residual, raw.triple.left_residual));
}

TEST(Triple, OrthogonalPairIsRejected) {
  const auto sys = lti_two_modes();
  ResolventWorkspace ws(sys);
  const auto e1 = TrigVecFn::constant(kTwoPi, Eigen::Vector2cd(1.0, 0.0));
  const auto e2 = TrigVecFn::constant(kTwoPi, Eigen::Vector2cd(0.0, 1.0));
  EXPECT_THROW(make_triple(ws, -1.0, e1, e2), NormalizationError);
  const auto t = make_triple(ws, -1.0, 3.0 * e1, kI * e1);
  EXPECT_LT(std::abs(t.q(0.0).dot(t.p(0.0)) - 1.0), 1e-15);
  EXPECT_LT(t.residual, 1e-15);
}
