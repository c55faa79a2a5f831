#pragma once

// Experiment harness: Monte Carlo checks of the estimator bias, variance and
// tail bounds, a fuzzer for the clipped-Newton perturbation inequalities, the
// noiseless Newton iteration bound, regret sweeps with log-log slope fits and
// an audit of the lower-bound hard instances.
//
// Every check produces a BoundCheckReport that carries the slack multiplier
// it was judged with: pass <=> empirical <= bound + k * stderr + fp_floor.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "zoopt/error.hpp"
#include "zoopt/estimators.hpp"
#include "zoopt/function_space.hpp"
#include "zoopt/optimizer.hpp"
#include "zoopt/oracle.hpp"
#include "zoopt/random.hpp"
#include "zoopt/spectral.hpp"

namespace zoopt {

/// Slack multipliers: mean-type checks use 5 standard errors, tail frequencies 3.
inline constexpr double kMeanSlack = 5.0;
inline constexpr double kTailSlack = 3.0;

struct BoundCheckReport {
  std::string claim;
  std::string parameters;
  double empirical = 0.0;
  double std_error = 0.0;
  double bound = 0.0;
  double k = 0.0;
  double fp_floor = 0.0;
  double margin = 0.0;  // bound + k * std_error + fp_floor - empirical
  bool pass = false;
};

inline BoundCheckReport make_report(std::string claim, std::string parameters, double empirical,
                                    double std_error, double bound, double k,
                                    double fp_floor = 0.0) {
  BoundCheckReport r;
  r.claim = std::move(claim);
  r.parameters = std::move(parameters);
  r.empirical = empirical;
  r.std_error = std_error;
  r.bound = bound;
  r.k = k;
  r.fp_floor = fp_floor;
  r.margin = bound + k * std_error + fp_floor - empirical;
  r.pass = r.margin >= 0.0;
  return r;
}

inline bool all_pass(const std::vector<BoundCheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Floating-point floor for comparisons whose statistical error can be exactly
// zero (degenerate or noiseless estimators).
inline double fp_floor_for(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Gradient estimator bias and variance.

/// Upper bound on ||E[g_hat] - Z grad f(x)||: lambda_Z^3 rho sqrt(d) / (2 (d + 2)).
inline double gradient_bias_bound(double lambda_z, double rho, std::size_t d) {
  const double dd = static_cast<double>(d);
  return lambda_z * lambda_z * lambda_z * rho * std::sqrt(dd) / (2.0 * (dd + 2.0));
}

/// Upper bound on Tr Cov[g_hat]:
///   (2d/n) ||Z grad f||^2 + (d^2 / 18n) (rho lambda_Z^3)^2 + d^2 / 2n.
inline double gradient_variance_bound(double zgrad_norm2, double lambda_z, double rho,
                                      std::size_t d, std::uint64_t n) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double l3 = rho * lambda_z * lambda_z * lambda_z;
  return 2.0 * dd / nn * zgrad_norm2 + dd * dd / (18.0 * nn) * l3 * l3 + dd * dd / (2.0 * nn);
}

/// Monte Carlo bias of single-sample gradient estimates on a noiseless oracle.
/// The standard error is sqrt(Tr Cov / n_mc), the RMS size of the Monte Carlo
/// error of the mean vector. `bound_scale` multiplies the theoretical bound.
inline BoundCheckReport bias_experiment(const Objective& objective, const Vector& x,
                                        const SymmetricMatrix& z, std::uint64_t n_mc,
                                        std::uint64_t seed, double bound_scale = 1.0) {
  if (n_mc < 2) throw Error("bias_experiment: need at least two Monte Carlo samples");
  NoisyOracle oracle(objective, NoiseModel::zero(), 2 * n_mc, seed);
  const auto d = static_cast<Eigen::Index>(objective.dim());
  Vector mean = Vector::Zero(d);
  Vector m2 = Vector::Zero(d);
  for (std::uint64_t i = 0; i < n_mc; ++i) {
    const Vector g = gradient_est(oracle, x, z, 1).g;
    const Vector delta = g - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct(g - mean);
  }
  const double trace_cov = m2.sum() / static_cast<double>(n_mc - 1);
  const Vector target = z * objective.gradient(x);
  const double bias = (mean - target).norm();
  const double se = std::sqrt(trace_cov / static_cast<double>(n_mc));
  const double lambda = max_singular_value(z);
  const double bound = bound_scale * gradient_bias_bound(lambda, objective.params().rho, x.size());
  return make_report("gradient-bias",
                     "d=" + std::to_string(x.size()) + ",lambda_Z=" + detail::fmt_num(lambda) +
                         ",n_mc=" + std::to_string(n_mc) + ",scale=" + detail::fmt_num(bound_scale),
                     bias, se, bound, kMeanSlack, detail::fp_floor_for(bound));
}

/// Empirical Tr Cov[g_hat] of n-sample estimates under the given noise
/// (standard Gaussian by default) against the three-term bound. The standard
/// error is that of the mean of ||g_i - g_bar||^2.
inline BoundCheckReport variance_experiment(const Objective& objective, const Vector& x,
                                            const SymmetricMatrix& z, std::uint64_t n,
                                            std::uint64_t n_mc, std::uint64_t seed,
                                            NoiseModel noise = NoiseModel::std_gaussian(),
                                            double bound_scale = 1.0) {
  if (n_mc < 2) throw Error("variance_experiment: need at least two Monte Carlo samples");
  NoisyOracle oracle(objective, noise, 2 * n * n_mc, seed);
  std::vector<Vector> samples;
  samples.reserve(n_mc);
  Vector mean = Vector::Zero(x.size());
  for (std::uint64_t i = 0; i < n_mc; ++i) {
    samples.push_back(gradient_est(oracle, x, z, n).g);
    mean += samples.back();
  }
  mean /= static_cast<double>(n_mc);
  double sum_q = 0.0;
  double sum_q2 = 0.0;
  for (const auto& g : samples) {
    const double q = (g - mean).squaredNorm();
    sum_q += q;
    sum_q2 += q * q;
  }
  const double nm = static_cast<double>(n_mc);
  const double mean_q = sum_q / nm;
  const double var_q = std::max(0.0, (sum_q2 - nm * mean_q * mean_q) / (nm - 1.0));
  const double trace = sum_q / (nm - 1.0);
  const double se = std::sqrt(var_q / nm) * nm / (nm - 1.0);
  const double lambda = max_singular_value(z);
  const double zg2 = (z * objective.gradient(x)).squaredNorm();
  const double bound = bound_scale * gradient_variance_bound(zg2, lambda, objective.params().rho,
                                                             x.size(), n);
  return make_report("gradient-variance",
                     "d=" + std::to_string(x.size()) + ",n=" + std::to_string(n) +
                         ",lambda_Z=" + detail::fmt_num(lambda) + ",n_mc=" + std::to_string(n_mc),
                     trace, se, bound, kMeanSlack, detail::fp_floor_for(bound));
}

// ---------------------------------------------------------------------------
// Sub-Gaussian tails of the coordinate-wise estimators.

enum class ConcentrationKind { kBootstrap, kHessian };

/// Denominator D of the tail bound 2 exp(-K^2 / D).
inline double tail_scale(ConcentrationKind kind, std::size_t d, double rho, double r,
                         std::uint64_t n) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double r2 = r * r;
  if (kind == ConcentrationKind::kBootstrap) {
    return 3.0 * dd * rho * rho * r2 * r2 / 4.0 + 12.0 * dd / (nn * r2);
  }
  return 2.0 * dd * dd * rho * rho * r2 + 144.0 * dd * dd / (nn * r2 * r2);
}

inline double tail_bound(ConcentrationKind kind, std::size_t d, double rho, double r,
                         std::uint64_t n, double K) {
  return 2.0 * std::exp(-K * K / tail_scale(kind, d, rho, r, n));
}

/// K grid {0.5, 1, 2} * sqrt(D).
inline std::vector<double> default_k_grid(ConcentrationKind kind, std::size_t d, double rho,
                                          double r, std::uint64_t n) {
  const double s = std::sqrt(tail_scale(kind, d, rho, r, n));
  return {0.5 * s, s, 2.0 * s};
}

/// Exceedance frequency of ||m_hat - grad f|| (or ||H_hat - hess f||_F) at each
/// K against the theoretical tail, with binomial standard errors.
inline std::vector<BoundCheckReport> concentration_experiment(
    ConcentrationKind kind, const Objective& objective, const Vector& x, double r,
    std::uint64_t n, const std::vector<double>& k_grid, std::uint64_t n_mc, std::uint64_t seed,
    NoiseModel noise = NoiseModel::std_gaussian()) {
  const std::size_t d = objective.dim();
  const auto est_kind =
      kind == ConcentrationKind::kBootstrap ? EstimatorKind::kBootstrap : EstimatorKind::kHessian;
  NoisyOracle oracle(objective, noise, query_cost(est_kind, d, n) * n_mc, seed);
  std::vector<double> errors;
  errors.reserve(n_mc);
  const Vector grad = objective.gradient(x);
  const SymmetricMatrix hess = objective.hessian(x);
  for (std::uint64_t i = 0; i < n_mc; ++i) {
    if (kind == ConcentrationKind::kBootstrap) {
      errors.push_back((bootstrapping_est(oracle, x, r, n) - grad).norm());
    } else {
      errors.push_back(
          (hessian_est(oracle, x, r, n, objective.params().M).h - hess).frobenius_norm());
    }
  }
  std::vector<BoundCheckReport> out;
  const double rho = objective.params().rho;
  const std::string name =
      kind == ConcentrationKind::kBootstrap ? "bootstrap-tail" : "hessian-tail";
  for (double K : k_grid) {
    const auto hits = std::count_if(errors.begin(), errors.end(), [K](double e) { return e >= K; });
    const double p = static_cast<double>(hits) / static_cast<double>(n_mc);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_mc));
    out.push_back(make_report(name,
                              "d=" + std::to_string(d) + ",n=" + std::to_string(n) +
                                  ",r=" + detail::fmt_num(r) + ",K=" + detail::fmt_num(K) +
                                  ",n_mc=" + std::to_string(n_mc),
                              p, se, tail_bound(kind, d, rho, r, n, K), kTailSlack));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Empirical noise tails: P[|w| > s] against 2 exp(-s^2).

inline std::vector<BoundCheckReport> noise_tail_check(const NoiseModel& noise,
                                                      const std::vector<double>& s_grid,
                                                      std::uint64_t n_draws, std::uint64_t seed) {
  Rng rng = make_stream(seed, Stream::kNoise);
  std::vector<double> draws(n_draws);
  for (auto& w : draws) w = std::abs(noise.draw(rng));
  std::vector<BoundCheckReport> out;
  for (double s : s_grid) {
    const auto hits = std::count_if(draws.begin(), draws.end(), [s](double w) { return w > s; });
    const double p = static_cast<double>(hits) / static_cast<double>(n_draws);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_draws));
    out.push_back(make_report("noise-tail",
                              std::string("noise=") + std::string(noise_name(noise.kind)) +
                                  ",s=" + detail::fmt_num(s) + ",draws=" + std::to_string(n_draws),
                              p, se, 2.0 * std::exp(-s * s), kTailSlack));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Perturbation inequalities of the clipped-Newton step.

struct StepPerturbationTerms {
  double diff_norm = 0.0;    // ||s - s'||
  double psi = 0.0;          // ||m - m'|| + R0 ||H - H'||_F
  double lhs_a = 0.0;        // ||s - s'||^2
  double rhs_a = 0.0;        // (2 R0 / M) psi
  double lhs_b = 0.0;        // ||H'_{m'*} (s - s')||
  double rhs_b = 0.0;        // (3 + 2 R0 / ||s - s'||) psi, +inf when s = s'
};

/// Both sides of the two perturbation inequalities for the clipped steps
/// s = H_{m*}^{-1} m and s' = H'_{m'*}^{-1} m' with cap R0, where M lower
/// bounds the spectra of H and H'.
inline StepPerturbationTerms step_perturbation_terms(const SymmetricMatrix& h,
                                                     const SymmetricMatrix& hp, const Vector& m,
                                                     const Vector& mp, double r0, double M) {
  const EigenDecomp e = eig_sym(h);
  const EigenDecomp ep = eig_sym(hp);
  const ClippedStep s = solve_mstar(e, m, r0);
  const ClippedStep sp = solve_mstar(ep, mp, r0);
  const Vector diff = s.step - sp.step;
  StepPerturbationTerms t;
  t.diff_norm = diff.norm();
  t.psi = (m - mp).norm() + r0 * (h - hp).frobenius_norm();
  t.lhs_a = diff.squaredNorm();
  t.rhs_a = 2.0 * r0 / M * t.psi;
  t.lhs_b = (clip_min_eig(ep, sp.m_star) * diff).norm();
  t.rhs_b = t.diff_norm > 0.0 ? (3.0 + 2.0 * r0 / t.diff_norm) * t.psi
                              : std::numeric_limits<double>::infinity();
  return t;
}

struct StepFuzzReport {
  std::size_t d = 0;
  std::uint64_t instances = 0;
  std::uint64_t violations_a = 0;
  std::uint64_t violations_b = 0;
  double worst_slack_a = std::numeric_limits<double>::infinity();  // min(rhs - lhs)
  double worst_slack_b = std::numeric_limits<double>::infinity();
  double abs_slack = 1e-8;

  bool pass() const noexcept { return violations_a == 0 && violations_b == 0; }
};

namespace detail {

inline Matrix random_orthogonal(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  // Sign-fix so the distribution is Haar.
  const Matrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (rmat(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

inline double log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

// Random SPD matrix with spectrum in [M, M * (1 + spread)].
inline SymmetricMatrix random_spd(std::size_t d, double M, double spread, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector vals(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals(i) = M * (1.0 + spread * u(rng));
  if (u(rng) < 0.3) vals(0) = M;  // exercise the boundary of the spectral floor
  return SymmetricMatrix::from_spectrum(random_orthogonal(d, rng), vals);
}

inline Vector random_gaussian(std::size_t d, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  return v;
}

}  // namespace detail

/// Random instances (m, m', H, H', R0) with spectra of H, H' at least M. Pairs
/// are drawn both independently and as small perturbations of each other, and
/// gradients span scales where the clipping is inactive through to strongly
/// active. Counts violations of either inequality beyond `abs_slack`.
inline StepFuzzReport step_perturbation_fuzz(std::uint64_t n_instances, std::size_t d, double M,
                                             double r0_lo, double r0_hi, Rng& rng,
                                             double abs_slack = 1e-8) {
  StepFuzzReport rep;
  rep.d = d;
  rep.instances = n_instances;
  rep.abs_slack = abs_slack;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t i = 0; i < n_instances; ++i) {
    const double r0 = detail::log_uniform(rng, r0_lo, r0_hi);
    const double spread = detail::log_uniform(rng, 1e-3, 1e2);
    const SymmetricMatrix h = detail::random_spd(d, M, spread, rng);
    const double m_scale = detail::log_uniform(rng, 1e-3, 1e3) * M * r0;
    const Vector m = detail::random_gaussian(d, m_scale, rng);
    SymmetricMatrix hp;
    Vector mp;
    if (u(rng) < 0.5) {
      hp = detail::random_spd(d, M, detail::log_uniform(rng, 1e-3, 1e2), rng);
      mp = detail::random_gaussian(d, detail::log_uniform(rng, 1e-3, 1e3) * M * r0, rng);
    } else {
      const double eps = detail::log_uniform(rng, 1e-8, 1.0);
      const Matrix noise = detail::random_gaussian(d * d, eps * M, rng).reshaped(
          static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      hp = clip_min_eig(h + SymmetricMatrix(Matrix(0.5 * (noise + noise.transpose()))), M);
      mp = m + detail::random_gaussian(d, eps * m_scale, rng);
    }
    const StepPerturbationTerms t = step_perturbation_terms(h, hp, m, mp, r0, M);
    const double slack_a = t.rhs_a - t.lhs_a;
    rep.worst_slack_a = std::min(rep.worst_slack_a, slack_a);
    if (slack_a < -abs_slack) ++rep.violations_a;
    if (t.diff_norm > 0.0) {
      const double slack_b = t.rhs_b - t.lhs_b;
      rep.worst_slack_b = std::min(rep.worst_slack_b, slack_b);
      if (slack_b < -abs_slack) ++rep.violations_b;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Fixtures.

/// Deterministic quadratic in F(rho, M, R) for dimension d: eigenvalues
/// M (1 + i), i = 0..d-1, in a rotation drawn from the fixture stream of seed
/// d, with minimizer (R / 2) (1, ..., 1) / sqrt(d).
inline Objective make_standard_quadratic(std::size_t d, const FunctionClassParams& params) {
  if (d == 0) throw ConfigError("standard quadratic: d must be positive");
  Rng rng = make_stream(d, Stream::kFixture);
  Vector vals(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals(i) = params.M * (1.0 + static_cast<double>(i));
  const SymmetricMatrix a = SymmetricMatrix::from_spectrum(detail::random_orthogonal(d, rng), vals);
  const Vector x_star = Vector::Constant(static_cast<Eigen::Index>(d),
                                         0.5 * params.R / std::sqrt(static_cast<double>(d)));
  return make_quadratic(a, -(a * x_star), params);
}

/// Random member of F(rho, M, R) with R^2 rho^2 / M^2 <= max_ratio: a rotated
/// quadratic or a product hard instance, d in [1, max_d]. Hard instances are
/// tuned to the smallest power-of-ten budget >= 1e8 that passes their guard.
inline Objective random_class_instance(Rng& rng, std::size_t max_d = 4, double max_ratio = 20.0) {
  std::uniform_int_distribution<std::size_t> pick_d(1, max_d);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t d = pick_d(rng);
  FunctionClassParams p;
  p.rho = detail::log_uniform(rng, 0.1, 10.0);
  p.M = detail::log_uniform(rng, 0.1, 10.0);
  p.R = std::sqrt(max_ratio * (0.005 + 0.995 * u(rng))) * p.M / p.rho;
  if (u(rng) < 0.5) {
    const SymmetricMatrix a = detail::random_spd(d, p.M, detail::log_uniform(rng, 1e-2, 1e2), rng);
    Vector x_star = detail::random_gaussian(d, 1.0, rng);
    x_star *= p.R * u(rng) / std::max(x_star.norm(), 1e-300);
    return make_quadratic(a, -(a * x_star), p);
  }
  std::vector<int> s(d);
  for (auto& v : s) v = u(rng) < 0.5 ? 1 : 2;
  for (double T = 1e8;; T *= 10.0) {
    try {
      return make_hard_instance_product(s, T, p);
    } catch (const TooSmallBudget&) {
      if (T > 1e30) throw;
    }
  }
}

// ---------------------------------------------------------------------------
// Noiseless Newton iteration bound.

struct NewtonCheckReport {
  double t_bound = 0.0;              // 5 R^2 rho^2 / M^2 + 1
  std::size_t iterations = 0;
  std::size_t violations = 0;        // t >= t_bound with ||grad|| > M^2 / (2 rho)
  std::size_t decay_violations = 0;  // quadratic-decay recursion failures
  double max_late_gradient = 0.0;

  bool pass() const noexcept { return violations == 0 && decay_violations == 0; }
};

/// Runs the noiseless clipped-Newton sequence past 5 R^2 rho^2 / M^2 + 1 and
/// checks (i) ||grad f(z_t)|| <= M^2 / (2 rho) for every t at or beyond that
/// bound and (ii) once the gradient is below M^2 / (2 rho), the next one obeys
/// ||grad f(z_{t+1})|| <= (rho / 2) (||grad f(z_t)|| / M)^2.
inline NewtonCheckReport newton_iteration_check(const Objective& objective,
                                                std::size_t extra_iterations = 10) {
  const FunctionClassParams& p = objective.params();
  NewtonCheckReport rep;
  rep.t_bound = 5.0 * p.R * p.R * p.rho * p.rho / (p.M * p.M) + 1.0;
  const auto t_max = static_cast<std::size_t>(std::ceil(rep.t_bound)) + extra_iterations;
  const std::vector<Vector> z = noiseless_newton_seq(objective, t_max);
  rep.iterations = z.size();
  const double threshold = p.M * p.M / (2.0 * p.rho);
  const double slack = 1e-12 * threshold;
  std::vector<double> gnorm(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) gnorm[i] = objective.gradient(z[i]).norm();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double t = static_cast<double>(i + 1);
    if (t >= rep.t_bound) {
      rep.max_late_gradient = std::max(rep.max_late_gradient, gnorm[i]);
      if (gnorm[i] > threshold + slack) ++rep.violations;
    }
    if (i + 1 < z.size() && gnorm[i] <= threshold) {
      const double ratio = gnorm[i] / p.M;
      if (gnorm[i + 1] > 0.5 * p.rho * ratio * ratio + slack) ++rep.decay_violations;
    }
  }
  return rep;
}

struct NewtonFuzzReport {
  std::uint64_t instances = 0;
  std::uint64_t failing_instances = 0;
  std::uint64_t quadratic_instances = 0;
  std::uint64_t hard_instances = 0;
  double worst_late_ratio = 0.0;  // max ||grad f(z_t)|| / (M^2 / 2 rho) over late t

  bool pass() const noexcept { return failing_instances == 0; }
};

inline NewtonFuzzReport newton_fuzz(std::uint64_t n_instances, std::uint64_t seed,
                                    std::size_t max_d = 4, double max_ratio = 20.0) {
  Rng rng = make_stream(seed, Stream::kFixture);
  NewtonFuzzReport rep;
  rep.instances = n_instances;
  for (std::uint64_t i = 0; i < n_instances; ++i) {
    const Objective obj = random_class_instance(rng, max_d, max_ratio);
    if (obj.family() == Family::kQuadratic) {
      ++rep.quadratic_instances;
    } else {
      ++rep.hard_instances;
    }
    const NewtonCheckReport r = newton_iteration_check(obj);
    const FunctionClassParams& p = obj.params();
    rep.worst_late_ratio =
        std::max(rep.worst_late_ratio, r.max_late_gradient / (p.M * p.M / (2.0 * p.rho)));
    if (!r.pass()) ++rep.failing_instances;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Log-log slope fits and regret sweeps.

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0;   // 95% Student-t interval
  double ci_high = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares of log(regret) on log(T).
inline LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw DegenerateFit("fit_loglog_slope: need at least three points");
  const double n = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [t, v] : points) {
    if (!(t > 0.0) || !(v > 0.0)) {
      throw DegenerateFit("fit_loglog_slope: T and regret must be positive");
    }
    sx += std::log(t);
    sy += std::log(v);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [t, v] : points) {
    const double dx = std::log(t) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (!(sxx > 0.0)) throw DegenerateFit("fit_loglog_slope: all T values are equal");
  LogLogFit fit;
  fit.points = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& [t, v] : points) {
    const double res = std::log(v) - (fit.intercept + fit.slope * std::log(t));
    sse += res * res;
  }
  fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  const double q = boost::math::quantile(dist, 0.975);
  fit.ci_low = fit.slope - q * fit.slope_se;
  fit.ci_high = fit.slope + q * fit.slope_se;
  return fit;
}

/// Builds the objective for dimension d and budget T (hard instances are tuned to T).
using FamilyFactory = std::function<Objective(std::size_t d, std::uint64_t T)>;

struct TrialRecord {
  std::size_t d = 0;
  std::uint64_t T = 0;
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  double rho = 0.0;
  double M = 0.0;
  double regret = 0.0;
  double regret_bootstrap = 0.0;
  std::uint64_t queries_used = 0;
  double wall_ms = 0.0;
};

struct SweepCell {
  std::size_t d = 0;
  std::uint64_t T = 0;
  std::uint64_t trials = 0;
  double mean_regret = 0.0;
  double stderr_regret = 0.0;
  double mean_regret_bootstrap = 0.0;
  /// d rho^(2/3) T^(-2/3) / M, the minimax rate without its constant.
  double reference_rate = 0.0;
};

struct SlopeResult {
  std::size_t d = 0;
  bool ok = false;
  LogLogFit fit;
  std::string error;
};

struct RegretSweepResult {
  std::vector<TrialRecord> trials;
  std::vector<SweepCell> cells;
  std::vector<SlopeResult> slopes;
};

/// Runs `fn(i)` for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Mean simple regret of the two-stage algorithm over a (d, T) grid, with one
/// log-log slope fit per d. Trial i of every cell uses seed seed0 + i.
/// `timer` (optional) returns wall milliseconds of a callable's execution.
inline RegretSweepResult regret_sweep(const FamilyFactory& family,
                                      const std::vector<std::size_t>& d_list,
                                      const std::vector<std::uint64_t>& t_list,
                                      std::uint64_t trials, std::uint64_t seed0,
                                      const NoiseModel& noise, std::size_t threads = 1,
                                      bool record_wall_time = false) {
  if (trials == 0) throw ConfigError("regret_sweep: trials must be positive");
  RegretSweepResult out;
  for (std::size_t d : d_list) {
    for (std::uint64_t T : t_list) {
      for (std::uint64_t i = 0; i < trials; ++i) {
        TrialRecord rec;
        rec.d = d;
        rec.T = T;
        rec.trial = i;
        rec.seed = seed0 + i;
        out.trials.push_back(rec);
      }
    }
  }
  parallel_for(out.trials.size(), threads, [&](std::size_t idx) {
    TrialRecord& rec = out.trials[idx];
    const Objective obj = family(rec.d, rec.T);
    const auto start = std::chrono::steady_clock::now();
    const RunResult res = run(obj, rec.T, rec.seed, noise);
    const auto stop = std::chrono::steady_clock::now();
    rec.rho = obj.params().rho;
    rec.M = obj.params().M;
    rec.regret = res.regret;
    rec.regret_bootstrap = res.regret_bootstrap;
    rec.queries_used = res.queries_used;
    rec.wall_ms = record_wall_time
                      ? std::chrono::duration<double, std::milli>(stop - start).count()
                      : 0.0;
  });
  std::size_t idx = 0;
  for (std::size_t d : d_list) {
    std::vector<std::pair<double, double>> points;
    for (std::uint64_t T : t_list) {
      SweepCell cell;
      cell.d = d;
      cell.T = T;
      cell.trials = trials;
      double s = 0.0, s2 = 0.0, sb = 0.0;
      double rho = 0.0, M = 0.0;
      for (std::uint64_t i = 0; i < trials; ++i, ++idx) {
        const TrialRecord& rec = out.trials[idx];
        s += rec.regret;
        s2 += rec.regret * rec.regret;
        sb += rec.regret_bootstrap;
        rho = rec.rho;
        M = rec.M;
      }
      const double nt = static_cast<double>(trials);
      cell.mean_regret = s / nt;
      cell.stderr_regret =
          trials > 1 ? std::sqrt(std::max(0.0, (s2 - nt * cell.mean_regret * cell.mean_regret) /
                                                   (nt - 1.0)) /
                                 nt)
                     : 0.0;
      cell.mean_regret_bootstrap = sb / nt;
      cell.reference_rate = static_cast<double>(d) * std::cbrt(rho * rho) *
                            std::pow(static_cast<double>(T), -2.0 / 3.0) / M;
      out.cells.push_back(cell);
      points.emplace_back(static_cast<double>(T), cell.mean_regret);
    }
    SlopeResult sr;
    sr.d = d;
    try {
      sr.fit = fit_loglog_slope(points);
      sr.ok = true;
    } catch (const DegenerateFit& e) {
      sr.error = e.what();
    }
    out.slopes.push_back(sr);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lower-bound hard-instance audit.

struct LowerBoundAudit {
  double T = 0.0;
  std::size_t d = 1;
  HardInstanceParams instance;
  MembershipReport membership_f1;
  MembershipReport membership_f2;
  double gap_f1 = 0.0;               // f_1(0) - inf f_1
  double gap_f2 = 0.0;
  bool gap_ok = false;               // both gaps >= 4 eps
  double max_local_variance = 0.0;   // max_x ((f_1(x) - f_2(x)) / 2)^2
  bool variance_ok = false;          // <= 1 / T
  double scaled_eps = 0.0;           // eps T^(2/3)
  double limit_eps = 0.0;            // rho^(2/3) / (128 pi^(4/3) M)
  bool limit_ok = false;             // within 5%
  bool product_ok = true;            // separability and membership for d > 1
  std::size_t grid_points = 0;

  bool pass() const noexcept {
    return membership_f1.all() && membership_f2.all() && gap_ok && variance_ok && limit_ok &&
           product_ok;
  }
};

/// Audits the pair f_1, f_2 tuned to budget T on a dense grid: class
/// membership, the 4 eps regret gap at the origin, the maximum local variance
/// under the uniform prior, and the limiting value of eps T^(2/3). For d > 1
/// the product construction is checked for separability and membership.
inline LowerBoundAudit lower_bound_audit(double T, std::size_t d, const FunctionClassParams& params,
                                         std::size_t grid_points = 10000,
                                         std::uint64_t seed = 1) {
  const Objective f1 = make_hard_instance_1d(1, T, params);
  const Objective f2 = make_hard_instance_1d(2, T, params);
  LowerBoundAudit a;
  a.T = T;
  a.d = d;
  a.instance = HardInstanceParams::for_budget(T, params);
  const double x0 = a.instance.x0;

  std::vector<double> xs;
  xs.reserve(grid_points + 201);
  const double lo = -4.0 * std::numbers::pi * x0;
  const double hi = 4.0 * std::numbers::pi * x0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    xs.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_points - 1));
  }
  for (int i = 0; i <= 200; ++i) xs.push_back(-params.R + 2.0 * params.R * i / 200.0);
  std::sort(xs.begin(), xs.end());
  a.grid_points = xs.size();

  auto vec1 = [](double v) { return Vector::Constant(1, v); };
  std::vector<PointPair> pairs;
  pairs.reserve(2 * xs.size());
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) pairs.emplace_back(vec1(xs[i]), vec1(xs[i + 1]));
  Rng rng = make_stream(seed, Stream::kFixture);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  for (std::size_t i = 0; i < xs.size(); ++i) pairs.emplace_back(vec1(xs[pick(rng)]), vec1(xs[pick(rng)]));

  a.membership_f1 = check_membership(f1, pairs);
  a.membership_f2 = check_membership(f2, pairs);

  const Vector origin = Vector::Zero(1);
  a.gap_f1 = f1.value(origin) - optimal_value(f1);
  a.gap_f2 = f2.value(origin) - optimal_value(f2);
  a.gap_ok = a.gap_f1 >= 4.0 * a.instance.eps && a.gap_f2 >= 4.0 * a.instance.eps;

  for (double x : xs) {
    const double half = 0.5 * (f1.value(vec1(x)) - f2.value(vec1(x)));
    a.max_local_variance = std::max(a.max_local_variance, half * half);
  }
  a.variance_ok = a.max_local_variance <= 1.0 / T;

  a.scaled_eps = a.instance.eps * std::pow(T, 2.0 / 3.0);
  a.limit_eps = std::cbrt(params.rho * params.rho) /
                (128.0 * std::pow(std::numbers::pi, 4.0 / 3.0) * params.M);
  a.limit_ok = std::abs(a.scaled_eps - a.limit_eps) <= 0.05 * a.limit_eps;

  if (d > 1) {
    std::vector<int> s(d);
    std::bernoulli_distribution coin(0.5);
    for (auto& v : s) v = coin(rng) ? 1 : 2;
    const Objective fs = make_hard_instance_product(s, T, params);
    std::uniform_real_distribution<double> ux(lo, hi);
    std::vector<PointPair> pp;
    for (int i = 0; i < 200; ++i) {
      Vector x(static_cast<Eigen::Index>(d)), y(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) {
        x(static_cast<Eigen::Index>(j)) = ux(rng);
        y(static_cast<Eigen::Index>(j)) = ux(rng);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const Objective& fj = s[j] == 1 ? f1 : f2;
        sum += fj.value(vec1(x(static_cast<Eigen::Index>(j))));
      }
      if (std::abs(fs.value(x) - sum) > 1e-12 * (1.0 + std::abs(sum))) a.product_ok = false;
      pp.emplace_back(std::move(x), std::move(y));
    }
    if (!check_membership(fs, pp).all()) a.product_ok = false;
  }
  return a;
}

/// The audit as report rows. Boolean-valued checks are encoded as
/// empirical = failures, bound = 0.
inline std::vector<BoundCheckReport> lower_bound_reports(const LowerBoundAudit& a,
                                                         const FunctionClassParams& params,
                                                         double tol = 1e-9) {
  std::vector<BoundCheckReport> out;
  const std::string base = "T=" + detail::fmt_num(a.T) + ",d=" + std::to_string(a.d);
  auto membership = [&](const std::string& tag, const MembershipReport& m) {
    out.push_back(make_report(tag + "-hessian-lipschitz", base, m.worst_a1_ratio, 0.0, 1.0, 0.0,
                              tol));
    out.push_back(make_report(tag + "-strong-convexity", base + ",min_eig=" +
                                  detail::fmt_num(m.min_eigenvalue),
                              params.M, 0.0, m.min_eigenvalue, 0.0, tol * params.M));
    out.push_back(make_report(tag + "-minimizer-radius", base,
                              m.a3 ? m.minimizer_norm : std::numeric_limits<double>::infinity(),
                              0.0, params.R, 0.0));
  };
  membership("f1", a.membership_f1);
  membership("f2", a.membership_f2);
  out.push_back(make_report("regret-gap", base + ",eps=" + detail::fmt_num(a.instance.eps),
                            4.0 * a.instance.eps, 0.0, std::min(a.gap_f1, a.gap_f2), 0.0));
  out.push_back(make_report("local-variance", base, a.max_local_variance, 0.0, 1.0 / a.T, 0.0));
  out.push_back(make_report("eps-limit",
                            base + ",scaled_eps=" + detail::fmt_num(a.scaled_eps) +
                                ",limit=" + detail::fmt_num(a.limit_eps),
                            std::abs(a.scaled_eps - a.limit_eps), 0.0, 0.05 * a.limit_eps, 0.0));
  if (a.d > 1) {
    out.push_back(make_report("product-separability", base, a.product_ok ? 0.0 : 1.0, 0.0, 0.0,
                              0.0));
  }
  return out;
}

}  // namespace zoopt
