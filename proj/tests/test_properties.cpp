// Randomized invariant checks across modules. Each property is exercised on
// seeded random instances so failures reproduce.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "zoopt/optimizer.hpp"
#include "zoopt/verification.hpp"

using namespace zoopt;
using zoopt::testing::random_point;

namespace {

SymmetricMatrix random_symmetric(std::size_t d, Rng& rng) {
  std::normal_distribution<double> n(0.0, 2.0);
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return SymmetricMatrix(Matrix(0.5 * (m + m.transpose())));
}

}  // namespace

TEST(Property, ClipIsIdempotentAndFloorsSpectrum) {
  Rng rng(101);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const std::size_t d = 1 + i % 6;
    const SymmetricMatrix h = random_symmetric(d, rng);
    const double m = u(rng);
    const SymmetricMatrix c = clip_min_eig(h, m);
    ASSERT_GE(min_eigenvalue(c), m - 1e-12 * (1.0 + std::abs(m)));
    ASSERT_LE((clip_min_eig(c, m) - c).frobenius_norm(), 1e-10 * (1.0 + c.frobenius_norm()));
  }
}

TEST(Property, MstarNonincreasingInRadius) {
  Rng rng(102);
  for (int i = 0; i < 300; ++i) {
    const std::size_t d = 1 + i % 5;
    const SymmetricMatrix h = zoopt::detail::random_spd(d, 0.3, 30.0, rng);
    const Vector m = zoopt::detail::random_gaussian(d, 20.0, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double r0 = 0.01; r0 < 100.0; r0 *= 1.7) {
      const double ms = solve_mstar(h, m, r0).m_star;
      ASSERT_LE(ms, prev * (1.0 + 1e-10));
      prev = ms;
    }
  }
}

TEST(Property, RandomClassInstancesAreMembers) {
  Rng rng(103);
  for (int i = 0; i < 40; ++i) {
    const Objective f = random_class_instance(rng);
    const double scale = f.params().R;
    std::vector<PointPair> grid;
    for (int k = 0; k < 100; ++k) {
      grid.emplace_back(random_point(f.dim(), scale, rng), random_point(f.dim(), scale, rng));
    }
    const MembershipReport r = check_membership(f, grid);
    ASSERT_TRUE(r.all()) << family_name(f.family()) << " a1=" << r.a1 << " a2=" << r.a2
                         << " a3=" << r.a3;
  }
}

TEST(Property, HardInstancesMirrorEachOther) {
  const FunctionClassParams p{1.7, 0.6, 1.0};
  const Objective f1 = make_hard_instance_1d(1, 1e7, p);
  const Objective f2 = make_hard_instance_1d(2, 1e7, p);
  Rng rng(104);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = random_point(1, 0.5, rng);
    ASSERT_DOUBLE_EQ(f1.value(x), f2.value(-x));
  }
}

TEST(Property, RunStaysWithinBudgetAndStepCaps) {
  Rng rng(105);
  std::uniform_int_distribution<std::uint64_t> pick_T(2000, 200000);
  for (int i = 0; i < 30; ++i) {
    const Objective f = random_class_instance(rng, 3);
    const std::uint64_t T = pick_T(rng);
    RunResult r;
    try {
      r = run(f, T, static_cast<std::uint64_t>(i), NoiseModel::std_gaussian());
    } catch (const TooSmallBudget&) {
      continue;
    }
    const double cap = f.params().M / f.params().rho;
    ASSERT_LE(r.queries_used, T);
    ASSERT_EQ(r.queries_used, r.config.planned_cost());
    for (const auto& it : r.bootstrap.iterations) ASSERT_LE(it.step_norm, cap + 1e-12);
    ASSERT_LE(r.final.step_norm, cap + 1e-12);
    ASSERT_GE(r.regret, -1e-12);
  }
}

TEST(Property, RunIsDeterministic) {
  Rng rng(106);
  for (int i = 0; i < 5; ++i) {
    const Objective f = random_class_instance(rng, 3);
    const auto seed = static_cast<std::uint64_t>(1000 + i);
    const RunResult a = run(f, 30000, seed, NoiseModel::uniform_bounded(1.0));
    const RunResult b = run(f, 30000, seed, NoiseModel::uniform_bounded(1.0));
    ASSERT_EQ(a.x_t, b.x_t);
    ASSERT_EQ(a.regret, b.regret);
  }
}

TEST(Property, OracleUsageNeverExceedsBudget) {
  Rng rng(107);
  std::uniform_int_distribution<std::uint64_t> pick(1, 20);
  const Objective f = make_standard_quadratic(2, FunctionClassParams{1.0, 1.0, 1.0});
  NoisyOracle o(f, NoiseModel::std_gaussian(), 500, 1);
  std::uint64_t consumed = 0;
  for (int i = 0; i < 400; ++i) {
    const std::uint64_t n = pick(rng);
    try {
      o.query_mean(Vector::Zero(2), n);
      consumed += n;
    } catch (const BudgetExhausted&) {
      ASSERT_GT(n, 500 - consumed);
    }
    ASSERT_EQ(o.used(), consumed);
    ASSERT_LE(o.used(), o.budget());
  }
}

TEST(Property, NoiselessRunsAreExactOnQuadratics) {
  Rng rng(108);
  for (int i = 0; i < 20; ++i) {
    Objective f = random_class_instance(rng, 4);
    // Exactness needs the minimizer within one capped step of the origin.
    if (f.family() != Family::kQuadratic ||
        true_minimizer(f).norm() > f.params().M / f.params().rho) {
      continue;
    }
    const RunResult r = run(f, 50000, 1, NoiseModel::zero());
    ASSERT_LE(r.regret, 1e-10 * std::max(1.0, f.params().M * f.params().R * f.params().R));
  }
}
