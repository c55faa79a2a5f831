#pragma once

// Two-stage zeroth-order minimizer for strongly convex objectives with
// Lipschitz Hessian.
//
// First stage (bootstrapping): starting from the origin, floor(T^0.1)
// clipped-Newton iterations driven by coordinate-wise gradient and Hessian
// estimates. Each step is H_{m*}^{-1} m_hat where m* is the smallest
// eigenvalue clipping level that keeps the step inside the ball of radius
// M/rho.
//
// Final stage: one Hessian estimate H at x_B, a gradient estimate sampled on
// the hyperellipsoid shaped by Z_H = H^{-1/2} (rescaled so its largest
// eigenvalue is r_g), and a single Newton step projected to the M/rho ball.
//
// Roughly 0.8 T queries are planned; the rest of the budget is left unspent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "zoopt/error.hpp"
#include "zoopt/estimators.hpp"
#include "zoopt/function_space.hpp"
#include "zoopt/oracle.hpp"
#include "zoopt/spectral.hpp"

namespace zoopt {

struct StageConfig {
  std::uint64_t T = 0;
  std::uint64_t d = 0;
  double rho = 0.0;
  double M = 0.0;

  // first stage
  std::uint64_t n_boot_iters = 0;
  std::uint64_t n_m = 0;
  std::uint64_t n_h_boot = 0;
  double r_m = 0.0;
  double r_h_boot = 0.0;

  // final stage
  std::uint64_t n_g = 0;
  std::uint64_t n_h_final = 0;
  double r_g = 0.0;
  double r_h_final = 0.0;

  double step_cap() const { return M / rho; }

  std::uint64_t bootstrap_cost() const {
    return n_boot_iters * (query_cost(EstimatorKind::kBootstrap, d, n_m) +
                           query_cost(EstimatorKind::kHessian, d, n_h_boot));
  }
  std::uint64_t final_cost() const {
    return query_cost(EstimatorKind::kHessian, d, n_h_final) +
           query_cost(EstimatorKind::kGradient, d, n_g);
  }
  std::uint64_t planned_cost() const { return bootstrap_cost() + final_cost(); }
};

namespace detail {

inline std::uint64_t floor_to_u64(double v) {
  return v < 1.0 ? 0 : static_cast<std::uint64_t>(std::floor(v));
}

// floor(T^(1/10)), corrected so exact tenth powers are not lost to rounding.
inline std::uint64_t floor_tenth_root(std::uint64_t T) {
  auto k = floor_to_u64(std::pow(static_cast<double>(T), 0.1));
  auto pow10 = [](std::uint64_t b) {
    long double acc = 1.0L;
    for (int i = 0; i < 10; ++i) acc *= static_cast<long double>(b);
    return acc;
  };
  while (pow10(k + 1) <= static_cast<long double>(T)) ++k;
  while (k > 0 && pow10(k) > static_cast<long double>(T)) --k;
  return k;
}

}  // namespace detail

inline StageConfig plan_stages(std::uint64_t T, std::uint64_t d, double rho, double M) {
  if (T == 0 || d == 0) throw TooSmallBudget("plan_stages: T and d must be positive");
  if (!(rho > 0.0) || !(M > 0.0)) throw NotInClass("plan_stages: rho and M must be positive");
  const double t = static_cast<double>(T);
  const double dd = static_cast<double>(d);
  const double t09 = std::pow(t, 0.9);
  StageConfig c;
  c.T = T;
  c.d = d;
  c.rho = rho;
  c.M = M;
  c.n_boot_iters = detail::floor_tenth_root(T);
  c.n_m = detail::floor_to_u64(t09 / (10.0 * dd));
  c.n_h_boot = detail::floor_to_u64(t09 / (10.0 * dd * dd));
  c.n_g = detail::floor_to_u64(t / 10.0);
  c.n_h_final = detail::floor_to_u64(t / (10.0 * dd * dd));
  if (c.n_boot_iters == 0 || c.n_m == 0 || c.n_h_boot == 0 || c.n_g == 0 || c.n_h_final == 0) {
    throw TooSmallBudget("plan_stages: T = " + std::to_string(T) + " is too small for d = " +
                         std::to_string(d));
  }
  const double rho2 = rho * rho;
  c.r_m = std::pow(8.0 / (static_cast<double>(c.n_m) * rho2), 1.0 / 6.0);
  c.r_h_boot = std::pow(144.0 / (static_cast<double>(c.n_h_boot) * rho2), 1.0 / 6.0);
  c.r_g = std::pow(dd * dd * dd / (static_cast<double>(c.n_g) * rho2), 1.0 / 6.0);
  c.r_h_final = std::pow(144.0 / (static_cast<double>(c.n_h_final) * rho2), 1.0 / 6.0);
  if (c.planned_cost() > T) {
    throw TooSmallBudget("plan_stages: planned cost " + std::to_string(c.planned_cost()) +
                         " exceeds T = " + std::to_string(T));
  }
  return c;
}

struct BootstrapIteration {
  double m_star = 0.0;
  double gradient_norm = 0.0;     // ||m_hat||
  double hessian_min_eig = 0.0;   // of the clipped estimate
  double step_norm = 0.0;
};

struct BootstrapTrace {
  Vector x_b;
  std::vector<BootstrapIteration> iterations;
};

/// First stage. Every step norm is at most M/rho by construction of m*.
inline BootstrapTrace bootstrap_stage(NoisyOracle& oracle, const StageConfig& cfg) {
  oracle.require(cfg.bootstrap_cost());
  BootstrapTrace trace;
  Vector x = Vector::Zero(static_cast<Eigen::Index>(cfg.d));
  trace.iterations.reserve(cfg.n_boot_iters);
  for (std::uint64_t k = 0; k < cfg.n_boot_iters; ++k) {
    const Vector m_hat = bootstrapping_est(oracle, x, cfg.r_m, cfg.n_m);
    const HessianEstimate h = hessian_est(oracle, x, cfg.r_h_boot, cfg.n_h_boot, cfg.M);
    const EigenDecomp e = eig_sym(h.h);
    const ClippedStep s = solve_mstar(e, m_hat, cfg.step_cap());
    x -= s.step;
    trace.iterations.push_back({s.m_star, m_hat.norm(), e.min_value(), s.step.norm()});
  }
  trace.x_b = std::move(x);
  return trace;
}

/// Newton step -H^{-1} Z^{-1} g_hat for Z = (r_g / lambda) Z_H and Z_H^2 = H^{-1},
/// evaluated as -(lambda / r_g) Z_H g_hat and projected to the ball of radius
/// max_norm.
inline Vector projected_newton_step(const SymmetricMatrix& z_h, double lambda, double r_g,
                                    const Vector& g_hat, double max_norm) {
  Vector r = -(lambda / r_g) * (z_h * g_hat);
  const double norm = r.norm();
  if (norm > max_norm) r *= max_norm / norm;
  return r;
}

struct FinalTrace {
  Vector x_t;
  double hessian_min_eig = 0.0;
  double lambda_zh = 0.0;
  double gradient_norm = 0.0;   // ||g_hat||
  double step_norm = 0.0;       // after projection
  bool projected = false;
};

inline FinalTrace final_stage(NoisyOracle& oracle, const Vector& x_b, const StageConfig& cfg) {
  oracle.require(cfg.final_cost());
  const HessianEstimate h = hessian_est(oracle, x_b, cfg.r_h_final, cfg.n_h_final, cfg.M);
  const SymmetricMatrix z_h = inv_sqrt_sym(h.h);
  const double lambda = max_singular_value(z_h);
  const SymmetricMatrix z = z_h.scaled(cfg.r_g / lambda);
  const GradientEstimate g = gradient_est(oracle, x_b, z, cfg.n_g);
  const Vector unprojected = -(lambda / cfg.r_g) * (z_h * g.g);
  const Vector r = projected_newton_step(z_h, lambda, cfg.r_g, g.g, cfg.step_cap());
  FinalTrace trace;
  trace.x_t = x_b + r;
  trace.hessian_min_eig = min_eigenvalue(h.h);
  trace.lambda_zh = lambda;
  trace.gradient_norm = g.g.norm();
  trace.step_norm = r.norm();
  trace.projected = unprojected.norm() > cfg.step_cap();
  return trace;
}

struct RunResult {
  StageConfig config;
  Vector x_t;
  Vector x_b;
  std::uint64_t queries_used = 0;
  std::uint64_t bootstrap_queries = 0;
  std::uint64_t final_queries = 0;
  BootstrapTrace bootstrap;
  FinalTrace final;
  double regret = 0.0;            // f(x_T) - f(x*)
  double regret_bootstrap = 0.0;  // f(x_B) - f(x*)
};

/// Full two-stage run against a fresh oracle. The objective is used by the
/// oracle and, after the run, to score the outputs; the stages never see it.
inline RunResult run(const Objective& objective, std::uint64_t T, std::uint64_t seed,
                     const NoiseModel& noise) {
  if (objective.estimator_only()) {
    throw NotInClass("run: objective is not strongly convex (estimator-only fixture)");
  }
  objective.params().validate();
  const FunctionClassParams& p = objective.params();
  const StageConfig cfg = plan_stages(T, objective.dim(), p.rho, p.M);
  NoisyOracle oracle(objective, noise, T, seed);

  RunResult res;
  res.config = cfg;
  res.bootstrap = bootstrap_stage(oracle, cfg);
  res.bootstrap_queries = oracle.used();
  res.final = final_stage(oracle, res.bootstrap.x_b, cfg);
  res.queries_used = oracle.used();
  res.final_queries = res.queries_used - res.bootstrap_queries;
  res.x_b = res.bootstrap.x_b;
  res.x_t = res.final.x_t;

  const double f_star = optimal_value(objective);
  res.regret = objective.value(res.x_t) - f_star;
  res.regret_bootstrap = objective.value(res.x_b) - f_star;
  return res;
}

/// Noiseless reference sequence: z_1 = 0 and z_{t+1} = z_t - H_{m*}^{-1} grad f(z_t)
/// with the exact gradient and Hessian and step cap M/rho. Returns z_1..z_{t_max}.
inline std::vector<Vector> noiseless_newton_seq(const Objective& objective, std::size_t t_max) {
  if (objective.estimator_only()) {
    throw NotInClass("noiseless_newton_seq: objective is not strongly convex");
  }
  const double cap = objective.params().M / objective.params().rho;
  std::vector<Vector> z;
  z.reserve(t_max);
  if (t_max == 0) return z;
  z.push_back(Vector::Zero(static_cast<Eigen::Index>(objective.dim())));
  while (z.size() < t_max) {
    const Vector& cur = z.back();
    const ClippedStep s = solve_mstar(objective.hessian(cur), objective.gradient(cur), cap);
    z.push_back(cur - s.step);
  }
  return z;
}

}  // namespace zoopt
