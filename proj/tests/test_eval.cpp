#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "ltpmor/eval.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ltpmor;
using ltpmor::fixtures::random_system;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ExampleSystem small_example() { return build_example({20, 10, -4.0, 0.0, 0.5, 1.5}); }

Rom scalar_rom(cplx lambda) {
  return {VectorXc::Constant(1, lambda), TrigVecFn::constant(kTwoPi, VectorXc::Ones(1)),
          TrigVecFn::constant(kTwoPi, VectorXc::Ones(1)), 1.0};
}

/// Trapezoid-rule L2 norm of the columns of a sampled signal.
double l2_trapezoid(const std::vector<double>& t, const MatrixXc& samples) {
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto a = static_cast<Index>(i - 1), b = static_cast<Index>(i);
    acc += 0.5 * (t[i] - t[i - 1]) * (samples.row(a).squaredNorm() + samples.row(b).squaredNorm());
  }
  return std::sqrt(acc);
}

}  // namespace

TEST(SimulateRom, ZeroInputGivesZeroOutput) {
  const auto ex = small_example();
  InputSignal u;
  u.terms = {{0, 0.0}};
  const auto t = uniform_grid(5.0, 50);
  EXPECT_EQ(simulate_rom(example_rom(ex.truth), u, t).y.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(simulate_fom_example(ex.truth, u, t).y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(SimulateRom, ScalarModeClosedForm) {
  const auto t = uniform_grid(10.0, 101);
  const InputSignal u{};
  const auto y = simulate_rom(scalar_rom(-2.5), u, t).y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = t[i];
    const double z = (std::exp(-ti) - std::exp(-2.5 * ti)) / 1.5;
    EXPECT_NEAR(y(static_cast<Index>(i)).real(), z, 1e-14);
  }
  // resonant case lambda = -1: z = t exp(-t)
  const auto yr = simulate_rom(scalar_rom(-1.0), u, t).y;
  for (std::size_t i = 0; i < t.size(); ++i)
    EXPECT_NEAR(yr(static_cast<Index>(i)).real(), t[i] * std::exp(-t[i]), 1e-14);
  const auto yn = simulate_rom(scalar_rom(-1.0 + 1e-9), u, t).y;
  EXPECT_LT((yn - yr).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SimulateRom, RejectsBadGridAndPeriod) {
  const InputSignal u{};
  EXPECT_THROW(simulate_rom(scalar_rom(-1.0), u, {0.0, 1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(simulate_rom(scalar_rom(-1.0), u, {}), InvalidArgument);
  InputSignal v;
  v.period = 3.0;
  EXPECT_THROW(simulate_rom(scalar_rom(-1.0), v, {0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(uniform_grid(0.0, 10), InvalidArgument);
}

TEST(SimulateRom, BuiltFromExactTriplesMatchesModalSubset) {
  const auto ex = small_example();
  std::vector<Eigentriple> ts;
  for (Index j = 0; j < 10; ++j) ts.push_back(fixtures::example_triple(ex.truth, j));
  const Rom rom = build_rom(make_partial_floquet(ts), ex.system);
  Rom ref = example_rom(ex.truth);
  ref.lambdas = ref.lambdas.head(10).eval();
  TrigVecFn br(kTwoPi, ref.br.depth(), 10), cr(kTwoPi, ref.cr.depth(), 10);
  for (int k = -1; k <= 1; ++k) {
    br[k] = ref.br[k].head(10);
    cr[k] = ref.cr[k].head(10);
  }
  ref.br = br;
  ref.cr = cr;
  const auto t = uniform_grid(20.0, 400);
  const auto a = simulate_rom(rom, {}, t).y, b = simulate_rom(ref, {}, t).y;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12 * b.cwiseAbs().maxCoeff());
}

TEST(SimulateFom, BenchmarkClosedFormMatchesTimeStepper) {
  const auto ex = build_example({4, 2, -1.0, 0.0, 0.2, 0.5});
  const auto t = uniform_grid(20.0, 401);
  const InputSignal u{};
  const auto closed = simulate_fom_example(ex.truth, u, t);
  const auto stepped = simulate_fom(ex.system, u, t);
  EXPECT_GT(stepped.steps, 0);
  EXPECT_LT(pointwise_relative_error(closed.y, stepped.y).max_rel, 1e-7);
  EXPECT_EQ(closed.method, "floquet-closed-form");
}

TEST(SimulateFom, LtiMatchesMatrixExponential) {
  MatrixXc A(2, 2);
  A << -1.0, 0.5, 0.0, -3.0;
  const LtpSystem sys{TrigMatFn::constant(kTwoPi, A), TrigVecFn::constant(kTwoPi, Eigen::Vector2cd(1.0, 1.0)),
                      TrigVecFn::constant(kTwoPi, Eigen::Vector2cd(1.0, 0.0))};
  InputSignal u;
  u.sigma = 0.0;  // unit step
  const auto t = uniform_grid(4.0, 41);
  const auto sim = simulate_fom(sys, u, t);
  // x2 = (1 - e^{-3t}) / 3 and x1' = -x1 + x2 / 2 + 1 by hand
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = t[i];
    const double x1 = 7.0 / 6.0 - 1.25 * std::exp(-ti) + std::exp(-3.0 * ti) / 12.0;
    EXPECT_NEAR(sim.y(static_cast<Index>(i)).real(), x1, 1e-8) << ti;
  }
}

TEST(SimulateFom, RejectsLargeSystems) {
  const auto ex = build_example({66, 10, -1.0, 0.0, 1.0, 2.0});
  EXPECT_THROW(simulate_fom(ex.system, {}, uniform_grid(1.0, 3)), InvalidArgument);
}

TEST(OutputError, GuardAtZeroCrossings) {
  VectorXc y(4), yr(4);
  y << 1.0, 0.0, -2.0, 0.5;
  yr << 1.1, 0.001, -2.0, 0.5;
  const auto e = pointwise_relative_error(y, yr);
  EXPECT_NEAR(e.rel(0), 0.1, 1e-12);
  EXPECT_NEAR(e.rel(1), 0.001 / (1e-3 * 2.0), 1e-12);
  EXPECT_EQ(e.rel(2), 0.0);
  EXPECT_NEAR(e.max_rel, 0.5, 1e-12);
  EXPECT_NEAR(e.mean_rel, 0.15, 1e-12);
  EXPECT_THROW(pointwise_relative_error(y, yr.head(3)), DimensionMismatch);
}

TEST(Hinf, IdenticalSystemsGiveZero) {
  const auto ext = example_extension(small_example().truth);
  EXPECT_EQ(sampled_hinf_error(ext, ext, {.points = 200}).value, 0.0);
}

TEST(Hinf, SingleTruncatedModePeaksAtItsFrequency) {
  LtiExtension ext;
  ext.K = 1;
  ext.lambdas = Eigen::Vector2cd(cplx{-1.0, 0.0}, cplx{-0.01, 5.0});
  ext.Bhat = MatrixXc::Ones(2, 3);
  ext.Chat = MatrixXc::Ones(2, 3);
  ext.Chat(1, 0) = 0.5;
  const auto err = sampled_hinf_error(ext, ext.subset({0}));
  const double theta = ext.Chat.row(1).norm() * ext.Bhat.row(1).norm();
  EXPECT_NEAR(err.value, theta / 0.01, 1e-8 * theta / 0.01);
  EXPECT_NEAR(err.nu_peak, 5.0, 1e-6);
  EXPECT_THROW(sampled_hinf_error(ext, LtiExtension{ext.lambdas, ext.Bhat, ext.Chat, 2}), InvalidArgument);
}

TEST(Hinf, GridCoversBothSigns) {
  const auto nu = frequency_samples({.nu_min = 1e-2, .nu_max = 1e2, .points = 50});
  EXPECT_EQ(nu.size(), 101u);
  EXPECT_NEAR(nu.front(), -1e2, 1e-10);
  EXPECT_NEAR(nu.back(), 1e2, 1e-10);
  EXPECT_TRUE(std::is_sorted(nu.begin(), nu.end()));
  EXPECT_EQ(frequency_samples({.nu_min = 1e-2, .nu_max = 1e2, .points = 50, .both_signs = false}).size(), 51u);
}

TEST(Hinf, OutputErrorChainOnBenchmark) {
  // dropped modes driven by the lifted input u_k(t) = exp(i w k t) exp(-t)
  const auto ex = small_example();
  const auto ext = example_extension(ex.truth);
  const auto table = dominance_table(ext);
  std::vector<Index> dropped;
  for (std::size_t i = 10; i < table.size(); ++i) dropped.push_back(table[i].index);
  const auto tail = ext.subset(dropped);
  const double hinf = sampled_hinf_error(ext, dominant_truncation(ext, 10)).value;

  const auto t = uniform_grid(20.0, 4001);
  const double w = ex.system.omega();
  MatrixXc yhat = MatrixXc::Zero(static_cast<Index>(t.size()), 3);
  for (std::size_t i = 0; i < t.size(); ++i) {
    VectorXc z = VectorXc::Zero(tail.r());
    for (Index j = 0; j < tail.r(); ++j)
      for (int k = -1; k <= 1; ++k) {
        const cplx a{-1.0, w * k}, lam = tail.lambdas(j);
        z(j) += tail.Bhat(j, k + 1) * (std::exp(a * t[i]) - std::exp(lam * t[i])) / (a - lam);
      }
    yhat.row(static_cast<Index>(i)) = (tail.Chat.adjoint() * z).transpose();
  }
  const double u_norm = std::sqrt(3.0 * 0.5);  // three harmonics of exp(-t) on [0, inf)
  EXPECT_LE(l2_trapezoid(t, yhat), 1.05 * hinf * u_norm);
  EXPECT_GT(l2_trapezoid(t, yhat), 0.0);
}

TEST(BalancedTruncation, FullOrderIsExact) {
  const auto ext = example_extension(small_example().truth);
  const BalancedTruncator bt(ext);
  const auto full = bt.reduce(ext.r());
  const double ref = hinf_norm(ext, {.points = 300}).value;
  EXPECT_LT(sampled_hinf_error(ext, full, {.points = 300}).value, 1e-10 * ref);
  const auto& hsv = bt.hankel_singular_values();
  for (Index i = 1; i < hsv.size(); ++i) EXPECT_LE(hsv(i), hsv(i - 1));
  EXPECT_THROW(bt.reduce(0), InvalidArgument);
}

TEST(BalancedTruncation, NoWorseThanDominantPoleTruncation) {
  const auto ext = example_extension(small_example().truth);
  const BalancedTruncator bt(ext);
  const FrequencyGrid grid{.points = 600};
  double prev_bt = std::numeric_limits<double>::infinity();
  double prev_dpt = prev_bt;
  for (Index r = 1; r <= 8; ++r) {
    const double e_bt = sampled_hinf_error(ext, bt.reduce(r), grid).value;
    const double e_dpt = sampled_hinf_error(ext, dominant_truncation(ext, r), grid).value;
    EXPECT_LE(e_bt, e_dpt) << r;
    EXPECT_LT(e_bt, prev_bt) << r;
    EXPECT_LT(e_dpt, prev_dpt) << r;
    prev_bt = e_bt;
    prev_dpt = e_dpt;
  }
}

TEST(BalancedTruncation, RejectsUnstableMode) {
  LtiExtension ext;
  ext.K = 0;
  ext.lambdas = Eigen::Vector2cd(-1.0, 0.5);
  ext.Bhat = MatrixXc::Ones(2, 1);
  ext.Chat = MatrixXc::Ones(2, 1);
  EXPECT_THROW(BalancedTruncator{ext}, UnstableMode);
}

TEST(FloquetOracle, LtiExponentsAreEigenvalues) {
  MatrixXc A(3, 3);
  A << -1.0, 0.2, 0.0, 0.0, cplx(-0.5, 0.3), 0.1, 0.0, 0.0, -2.0;
  const LtpSystem sys{TrigMatFn::constant(kTwoPi, A), TrigVecFn::constant(kTwoPi, VectorXc::Ones(3)),
                      TrigVecFn::constant(kTwoPi, VectorXc::Ones(3))};
  const auto orc = dense_floquet_oracle(sys);
  for (cplx lam : {cplx(-1.0, 0.0), cplx(-0.5, 0.3), cplx(-2.0, 0.0)}) {
    EXPECT_LT(distance_to_spectrum(lam, orc.hill_exponents, 1.0), 1e-10);
    EXPECT_LT(distance_to_spectrum(lam, orc.monodromy_exponents, 1.0), 1e-10);
  }
  EXPECT_FALSE(orc.defective);
}

TEST(FloquetOracle, BenchmarkExponentsAreDiagonalOfR) {
  const auto ex = build_example({4, 2, -1.0, 0.0, 0.2, 0.5});
  const auto orc = dense_floquet_oracle(ex.system);
  ASSERT_EQ(orc.hill_exponents.size(), 4);
  for (Index j = 0; j < 4; ++j) {
    EXPECT_LT(distance_to_spectrum(ex.truth.lambdas(j), orc.hill_exponents, 1.0), 1e-10);
    EXPECT_LT(distance_to_spectrum(ex.truth.lambdas(j), orc.monodromy_exponents, 1.0), 1e-8);
  }
  EXPECT_LT(orc.agreement, 1e-8);
}

TEST(FloquetOracle, TwoRoutesAgreeOnRandomSystem) {
  std::mt19937_64 rng(2718);
  const auto sys = random_system(rng, {.n = 3, .depth_a = 1, .decay_lo = 0.1, .decay_hi = 1.2});
  const auto orc = dense_floquet_oracle(sys);
  EXPECT_LT(orc.agreement, 1e-6);
  ResolventWorkspace ws(sys);
  for (const auto& t : orc.triples) {
    EXPECT_LT(right_residual(ws, t.lambda, t.p), 1e-8);
    EXPECT_LT(biorthogonality_defect(t), 1e-8);
    const auto c = canonicalize_lambda(t.lambda, sys.omega());
    EXPECT_EQ(c.k, 0);
  }
}

TEST(FloquetOracle, RejectsLargeSystems) {
  const auto ex = build_example({18, 2, -1.0, 0.0, 0.2, 0.5});
  EXPECT_THROW(dense_floquet_oracle(ex.system), InvalidArgument);
}
