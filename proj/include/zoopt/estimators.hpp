#pragma once

// Function-value estimators of gradients and Hessians with exact query
// accounting. All three only ever touch the objective through the oracle.

#include <cstdint>
#include <functional>

#include "zoopt/error.hpp"
#include "zoopt/oracle.hpp"
#include "zoopt/spectral.hpp"

namespace zoopt {

enum class EstimatorKind { kGradient, kBootstrap, kHessian };

/// Exact number of oracle queries consumed by one estimator call.
constexpr std::uint64_t query_cost(EstimatorKind kind, std::uint64_t d, std::uint64_t n) {
  switch (kind) {
    case EstimatorKind::kGradient: return 2 * n;
    case EstimatorKind::kBootstrap: return 2 * n * d;
    case EstimatorKind::kHessian: return n * (2 * d * d + 1);
  }
  return 0;
}

struct GradientEstimate {
  Vector g;                // estimate of Z grad f(x)
  std::uint64_t n_used = 0;
  SymmetricMatrix shape;
};

struct HessianEstimate {
  SymmetricMatrix h;       // after eigenvalue clipping at M
  SymmetricMatrix raw;     // entrywise stencil estimate before clipping
  std::uint64_t n_used = 0;
};

/// Two-point estimator on the hyperellipsoid x + Z S^{d-1}:
///   g_hat = (1/n) sum_k (d/2) (y+_k - y-_k) u_k,
/// with one observation at each of x +/- Z u_k. `next_direction` supplies the
/// unit vectors u_k.
inline GradientEstimate gradient_est(NoisyOracle& oracle, const Vector& x, const SymmetricMatrix& z,
                                     std::uint64_t n,
                                     const std::function<Vector()>& next_direction) {
  if (n == 0) throw Error("gradient_est: n must be positive");
  oracle.require(query_cost(EstimatorKind::kGradient, oracle.dim(), n));
  const double d = static_cast<double>(x.size());
  Vector acc = Vector::Zero(x.size());
  for (std::uint64_t k = 0; k < n; ++k) {
    const Vector u = next_direction();
    const Vector offset = z * u;
    const double y_plus = oracle.query(x + offset);
    const double y_minus = oracle.query(x - offset);
    acc += (0.5 * d * (y_plus - y_minus)) * u;
  }
  return GradientEstimate{acc / static_cast<double>(n), 2 * n, z};
}

inline GradientEstimate gradient_est(NoisyOracle& oracle, const Vector& x, const SymmetricMatrix& z,
                                     std::uint64_t n) {
  const auto d = static_cast<std::size_t>(x.size());
  return gradient_est(oracle, x, z, n,
                      [&oracle, d] { return sample_unit_sphere(d, oracle.direction_rng()); });
}

/// Coordinate-wise central differences, m_k = (y+ - y-) / 2r, each side
/// averaged over n observations.
inline Vector bootstrapping_est(NoisyOracle& oracle, const Vector& x, double r, std::uint64_t n) {
  if (n == 0) throw Error("bootstrapping_est: n must be positive");
  if (!(r > 0.0)) throw Error("bootstrapping_est: r must be positive");
  const auto d = x.size();
  oracle.require(query_cost(EstimatorKind::kBootstrap, static_cast<std::uint64_t>(d), n));
  Vector m(d);
  Vector probe = x;
  for (Eigen::Index k = 0; k < d; ++k) {
    probe(k) = x(k) + r;
    const double y_plus = oracle.query_mean(probe, n);
    probe(k) = x(k) - r;
    const double y_minus = oracle.query_mean(probe, n);
    probe(k) = x(k);
    m(k) = (y_plus - y_minus) / (2.0 * r);
  }
  return m;
}

/// Stencil Hessian estimate followed by clipping every eigenvalue at M.
///   diagonal:     (y+ + y- - 2y) / r^2, sides and centre averaged over n
///   off-diagonal: mean of n four-point stencils
///                 (f(x+re_k+re_l) + f(x-re_k-re_l) - f(x+re_k-re_l) - f(x-re_k+re_l)) / 4r^2
/// Total cost n (2 d^2 + 1).
inline HessianEstimate hessian_est(NoisyOracle& oracle, const Vector& x, double r, std::uint64_t n,
                                   double M) {
  if (n == 0) throw Error("hessian_est: n must be positive");
  if (!(r > 0.0)) throw Error("hessian_est: r must be positive");
  const auto d = x.size();
  oracle.require(query_cost(EstimatorKind::kHessian, static_cast<std::uint64_t>(d), n));
  const double r2 = r * r;
  Matrix h0(d, d);
  const double y0 = oracle.query_mean(x, n);
  Vector probe = x;
  for (Eigen::Index k = 0; k < d; ++k) {
    probe(k) = x(k) + r;
    const double y_plus = oracle.query_mean(probe, n);
    probe(k) = x(k) - r;
    const double y_minus = oracle.query_mean(probe, n);
    probe(k) = x(k);
    h0(k, k) = (y_plus + y_minus - 2.0 * y0) / r2;
    for (Eigen::Index l = k + 1; l < d; ++l) {
      double acc = 0.0;
      for (std::uint64_t i = 0; i < n; ++i) {
        probe(k) = x(k) + r;
        probe(l) = x(l) + r;
        const double pp = oracle.query(probe);
        probe(k) = x(k) - r;
        probe(l) = x(l) - r;
        const double mm = oracle.query(probe);
        probe(k) = x(k) + r;
        probe(l) = x(l) - r;
        const double pm = oracle.query(probe);
        probe(k) = x(k) - r;
        probe(l) = x(l) + r;
        const double mp = oracle.query(probe);
        acc += (pp + mm - pm - mp) / (4.0 * r2);
      }
      probe(k) = x(k);
      probe(l) = x(l);
      h0(k, l) = acc / static_cast<double>(n);
      h0(l, k) = h0(k, l);
    }
  }
  SymmetricMatrix raw(h0);
  SymmetricMatrix clipped = clip_min_eig(raw, M);
  return HessianEstimate{std::move(clipped), std::move(raw),
                         query_cost(EstimatorKind::kHessian, static_cast<std::uint64_t>(d), n)};
}

}  // namespace zoopt
