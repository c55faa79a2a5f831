#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "zoopt/verification.hpp"

using namespace zoopt;

namespace {

const FunctionClassParams kUnit{1.0, 1.0, 1.0};

}  // namespace

TEST(BoundCheckReport, PassIffWithinSlack) {
  EXPECT_TRUE(make_report("x", "", 1.2, 0.1, 1.0, 2.0).pass);
  EXPECT_FALSE(make_report("x", "", 1.21, 0.1, 1.0, 2.0).pass);
  EXPECT_NEAR(make_report("x", "", 1.0, 0.1, 1.0, 3.0, 0.5).margin, 0.8, 1e-15);
}

TEST(FitLogLogSlope, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double T : {1e4, 3e4, 1e5, 3e5, 1e6}) pts.emplace_back(T, 2.5 * std::pow(T, -2.0 / 3.0));
  const LogLogFit f = fit_loglog_slope(pts);
  EXPECT_NEAR(f.slope, -2.0 / 3.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 2.5, 1e-10);
  EXPECT_LE(f.ci_high - f.ci_low, 1e-10);
}

TEST(FitLogLogSlope, ConstantAndDegenerate) {
  EXPECT_NEAR(fit_loglog_slope({{10, 3}, {100, 3}, {1000, 3}}).slope, 0.0, 1e-15);
  EXPECT_THROW(fit_loglog_slope({{10, 3}, {100, 3}}), DegenerateFit);
  EXPECT_THROW(fit_loglog_slope({{10, 3}, {100, 0}, {1000, 3}}), DegenerateFit);
  EXPECT_THROW(fit_loglog_slope({{10, 3}, {10, 2}, {10, 1}}), DegenerateFit);
}

TEST(FitLogLogSlope, ConfidenceIntervalCoversNoisySlope) {
  Rng rng(1);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 30; ++i) {
    const double T = std::pow(10.0, 3.0 + 0.1 * i);
    pts.emplace_back(T, std::pow(T, -0.7) * std::exp(noise(rng)));
  }
  const LogLogFit f = fit_loglog_slope(pts);
  EXPECT_LE(f.ci_low, -0.7);
  EXPECT_GE(f.ci_high, -0.7);
}

TEST(BiasExperiment, QuadraticIsUnbiased) {
  Matrix a(2, 2);
  a << 2.0, 0.3, 0.3, 1.2;
  Vector b(2);
  b << 0.2, -0.4;
  const Objective f = make_quadratic(SymmetricMatrix(a), b, kUnit);
  const BoundCheckReport r =
      bias_experiment(f, Vector::Ones(2), SymmetricMatrix::identity(2).scaled(0.5), 100000, 3);
  EXPECT_LE(r.empirical, 4.0 * r.std_error);
  EXPECT_TRUE(r.pass);
}

TEST(BiasExperiment, EqualityCaseAndScaledBoundFails) {
  const Objective f = make_cubic_perturbed(FunctionClassParams{1.0, 0.0, 1.0}, 1);
  const SymmetricMatrix z = SymmetricMatrix::identity(1).scaled(0.5);
  const BoundCheckReport r = bias_experiment(f, Vector::Zero(1), z, 10000, 4);
  EXPECT_NEAR(r.empirical, 0.125 / 6.0, 4.0 * r.std_error + 1e-15);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(bias_experiment(f, Vector::Zero(1), z, 10000, 4, 0.8).pass);
}

TEST(BiasExperiment, CubicPerturbedWithinBound) {
  const Objective f = make_cubic_perturbed(kUnit, 4);
  const BoundCheckReport r = bias_experiment(f, Vector::Constant(4, 0.3),
                                             SymmetricMatrix::identity(4).scaled(0.1), 200000, 5);
  EXPECT_TRUE(r.pass) << r.empirical << " vs " << r.bound;
}

TEST(VarianceExperiment, ConstantObjectiveTinyShape) {
  const Objective f = make_custom(
      2, [](const Vector&) { return 1.0; }, [](const Vector& x) { return Vector::Zero(x.size()); },
      [](const Vector&) { return SymmetricMatrix::identity(2).scaled(0.0); }, kUnit);
  const BoundCheckReport r =
      variance_experiment(f, Vector::Zero(2), SymmetricMatrix::identity(2).scaled(1e-6), 10, 5000, 6);
  // Pure noise: g = (d/2)(w+ - w-)u averaged over n gives trace d^2/(2n) exactly.
  EXPECT_NEAR(r.bound, 4.0 / 20.0, 1e-9);
  EXPECT_NEAR(r.empirical, 0.2, 5.0 * r.std_error);
  EXPECT_TRUE(r.pass);
}

TEST(VarianceExperiment, LargeGradientDominates) {
  const Objective f = make_quadratic(SymmetricMatrix::identity(2), Vector::Zero(2),
                                     FunctionClassParams{1.0, 1.0, 100.0});
  const Vector x = Vector::Constant(2, 30.0);
  const BoundCheckReport r =
      variance_experiment(f, x, SymmetricMatrix::identity(2), 10, 4000, 7);
  const double signal = 2.0 * 2.0 / 10.0 * x.squaredNorm();
  EXPECT_GT(signal, 0.9 * r.bound);
  EXPECT_TRUE(r.pass);
}

TEST(VarianceExperiment, NoiselessSmallShape) {
  const Objective f = make_standard_quadratic(3, kUnit);
  const SymmetricMatrix z = SymmetricMatrix::identity(3).scaled(0.01);
  const BoundCheckReport r =
      variance_experiment(f, Vector::Zero(3), z, 20, 4000, 8, NoiseModel::zero());
  const double zg2 = (z * f.gradient(Vector::Zero(3))).squaredNorm();
  // Exact value for linear f: (d - 1) ||Z grad||^2 / n.
  EXPECT_NEAR(r.empirical, 2.0 * zg2 / 20.0, 5.0 * r.std_error);
  EXPECT_TRUE(r.pass);
}

TEST(Concentration, ZeroNoiseHasNoExceedances) {
  const Objective f = make_standard_quadratic(2, kUnit);
  for (auto kind : {ConcentrationKind::kBootstrap, ConcentrationKind::kHessian}) {
    const auto reps = concentration_experiment(kind, f, Vector::Zero(2), 0.3, 10, {1e-3, 0.1}, 200,
                                               9, NoiseModel::zero());
    for (const auto& r : reps) {
      EXPECT_EQ(r.empirical, 0.0);
      EXPECT_TRUE(r.pass);
    }
  }
}

TEST(Concentration, KZeroIsTrivial) {
  EXPECT_GE(tail_bound(ConcentrationKind::kBootstrap, 2, 1.0, 0.3, 100, 0.0), 1.0);
  const Objective f = make_standard_quadratic(2, kUnit);
  const auto reps = concentration_experiment(ConcentrationKind::kHessian, f, Vector::Zero(2), 0.3,
                                             100, {0.0}, 100, 10);
  EXPECT_TRUE(reps.at(0).pass);
}

TEST(Concentration, GaussianNoiseWithinTails) {
  const Objective f = make_standard_quadratic(2, kUnit);
  for (auto kind : {ConcentrationKind::kBootstrap, ConcentrationKind::kHessian}) {
    const auto grid = default_k_grid(kind, 2, 1.0, 0.3, 100);
    const auto reps = concentration_experiment(kind, f, Vector::Zero(2), 0.3, 100, grid, 2000, 11);
    EXPECT_TRUE(all_pass(reps));
  }
}

TEST(NoiseTail, UniformSatisfiesStatedTail) {
  const auto reps =
      noise_tail_check(NoiseModel::uniform_bounded(std::sqrt(3.0)), {0.5, 1.0, 1.5, 2.0}, 200000, 12);
  EXPECT_TRUE(all_pass(reps));
}

// The stated tail 2 exp(-s^2) is tighter than the Gaussian's 2 Phi(-s) once
// s exceeds about 1.7, so unit-variance Gaussian noise violates it at s = 2.
TEST(NoiseTail, GaussianViolatesStatedTailAtTwo) {
  const auto reps = noise_tail_check(NoiseModel::std_gaussian(), {0.5, 1.0, 1.5, 2.0}, 1000000, 13);
  EXPECT_TRUE(reps[0].pass);
  EXPECT_TRUE(reps[1].pass);
  EXPECT_TRUE(reps[2].pass);
  EXPECT_FALSE(reps[3].pass);
  EXPECT_NEAR(reps[3].empirical, std::erfc(2.0 / std::sqrt(2.0)), 5.0 * reps[3].std_error);
}

TEST(StepPerturbation, IdenticalInputsGiveZero) {
  Rng rng(14);
  const SymmetricMatrix h = zoopt::detail::random_spd(3, 1.0, 5.0, rng);
  const Vector m = zoopt::detail::random_gaussian(3, 10.0, rng);
  const StepPerturbationTerms t = step_perturbation_terms(h, h, m, m, 0.5, 1.0);
  EXPECT_EQ(t.lhs_a, 0.0);
  EXPECT_EQ(t.psi, 0.0);
  const StepPerturbationTerms z =
      step_perturbation_terms(h, h, Vector::Zero(3), Vector::Zero(3), 0.5, 1.0);
  EXPECT_EQ(z.diff_norm, 0.0);
}

TEST(StepPerturbation, FuzzHasNoViolations) {
  for (std::size_t d : {1u, 2u, 4u}) {
    Rng rng(15 + d);
    const StepFuzzReport r = step_perturbation_fuzz(5000, d, 1.0, 0.01, 100.0, rng);
    EXPECT_TRUE(r.pass()) << d << " " << r.worst_slack_a << " " << r.worst_slack_b;
  }
}

TEST(LowerBoundAudit, LargeBudgetPasses) {
  const LowerBoundAudit a = lower_bound_audit(1e8, 1, kUnit);
  EXPECT_TRUE(a.pass());
  EXPECT_TRUE(all_pass(lower_bound_reports(a, kUnit)));
}

TEST(LowerBoundAudit, ProductConstruction) {
  const LowerBoundAudit a = lower_bound_audit(1e8, 3, kUnit, 2000);
  EXPECT_TRUE(a.product_ok);
  EXPECT_TRUE(a.pass());
}

TEST(LowerBoundAudit, SmallBudgetThrows) {
  EXPECT_THROW(lower_bound_audit(10.0, 1, FunctionClassParams{10.0, 1.0, 1.0}), TooSmallBudget);
}

TEST(LowerBoundAudit, ScaledEpsilonLimit) {
  const FunctionClassParams p{2.0, 0.5, 1.0};
  const auto h = HardInstanceParams::for_budget(1e10, p);
  const double limit =
      std::cbrt(p.rho * p.rho) / (128.0 * std::pow(std::numbers::pi, 4.0 / 3.0) * p.M);
  EXPECT_NEAR(h.eps * std::pow(1e10, 2.0 / 3.0), limit, 0.05 * limit);
  EXPECT_NEAR(h.eps * std::pow(1e10, 2.0 / 3.0), limit, 1e-12 * limit);
}

TEST(RegretSweep, AggregatesEveryTrialAndIsThreadInvariant) {
  auto family = [](std::size_t d, std::uint64_t) { return make_standard_quadratic(d, kUnit); };
  const auto a = regret_sweep(family, {1, 2}, {2000, 5000, 10000}, 4, 100, NoiseModel::std_gaussian(), 1);
  const auto b = regret_sweep(family, {1, 2}, {2000, 5000, 10000}, 4, 100, NoiseModel::std_gaussian(), 3);
  ASSERT_EQ(a.cells.size(), 6u);
  ASSERT_EQ(a.trials.size(), 24u);
  for (const auto& c : a.cells) EXPECT_GE(c.trials, 4u);
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    EXPECT_EQ(a.trials[i].regret, b.trials[i].regret);
    EXPECT_EQ(a.trials[i].seed, 100 + a.trials[i].trial);
  }
  ASSERT_EQ(a.slopes.size(), 2u);
  EXPECT_TRUE(a.slopes[0].ok);
}

TEST(RegretSweep, SingleBudgetReportsDegenerateFit) {
  auto family = [](std::size_t d, std::uint64_t) { return make_standard_quadratic(d, kUnit); };
  const auto r = regret_sweep(family, {2}, {5000}, 2, 0, NoiseModel::std_gaussian());
  ASSERT_EQ(r.slopes.size(), 1u);
  EXPECT_FALSE(r.slopes[0].ok);
  EXPECT_FALSE(r.slopes[0].error.empty());
}

TEST(NewtonFuzz, ModestRun) {
  const NewtonFuzzReport r = newton_fuzz(30, 16);
  EXPECT_TRUE(r.pass());
  EXPECT_GT(r.quadratic_instances, 0u);
  EXPECT_GT(r.hard_instances, 0u);
}
