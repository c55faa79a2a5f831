#pragma once

// Objectives with ground-truth value, gradient and Hessian, the concrete test
// families (quadratics, cubic-perturbed quadratics, separable hard instances),
// and numeric membership checks for the class F(rho, M, R):
//   A1  ||hess f(x) - hess f(x')||_F <= rho ||x - x'||_2
//   A2  every eigenvalue of hess f(x) is at least M
//   A3  the minimizer lies in the ball of radius R.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zoopt/error.hpp"
#include "zoopt/spectral.hpp"

namespace zoopt {

struct FunctionClassParams {
  double rho = 1.0;
  double M = 1.0;
  double R = 1.0;

  void validate() const {
    if (!(rho > 0.0) || !(M > 0.0) || !(R > 0.0)) {
      throw NotInClass("FunctionClassParams: rho, M and R must all be positive");
    }
  }
};

enum class Family { kQuadratic, kCubicPerturbed, kHardInstance, kCustom };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::kQuadratic: return "quadratic";
    case Family::kCubicPerturbed: return "cubic";
    case Family::kHardInstance: return "hard";
    case Family::kCustom: return "custom";
  }
  return "unknown";
}

namespace detail {

class ObjectiveImpl {
 public:
  virtual ~ObjectiveImpl() = default;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  virtual SymmetricMatrix hessian(const Vector& x) const = 0;
  virtual std::optional<Vector> analytic_minimizer() const { return std::nullopt; }
  /// Derivative of the j-th univariate term for separable families.
  virtual std::optional<double> coordinate_derivative(std::size_t /*j*/, double /*t*/) const {
    return std::nullopt;
  }
};

}  // namespace detail

/// Immutable, cheaply copyable test function. Copies share the same
/// underlying definition, so objectives may be read from many threads.
class Objective {
 public:
  Objective(std::shared_ptr<const detail::ObjectiveImpl> impl, std::size_t dim,
            FunctionClassParams params, Family family, bool estimator_only)
      : impl_(std::move(impl)),
        dim_(dim),
        params_(params),
        family_(family),
        estimator_only_(estimator_only) {}

  std::size_t dim() const noexcept { return dim_; }
  const FunctionClassParams& params() const noexcept { return params_; }
  Family family() const noexcept { return family_; }
  /// Satisfies the Lipschitz-Hessian condition only; not globally strongly convex.
  bool estimator_only() const noexcept { return estimator_only_; }

  double value(const Vector& x) const { return impl_->value(x); }
  Vector gradient(const Vector& x) const { return impl_->gradient(x); }
  SymmetricMatrix hessian(const Vector& x) const { return impl_->hessian(x); }

  const detail::ObjectiveImpl& impl() const noexcept { return *impl_; }

 private:
  std::shared_ptr<const detail::ObjectiveImpl> impl_;
  std::size_t dim_;
  FunctionClassParams params_;
  Family family_;
  bool estimator_only_;
};

// ---------------------------------------------------------------------------
// Base function of the hard instances.

/// g(x) = (sin(x/2) + 1)/2 on (-pi, 3pi], -cos(x) - 1 on (-3pi, -pi], 0 elsewhere.
inline double g_base(double x) {
  constexpr double pi = std::numbers::pi;
  if (x > -pi && x <= 3.0 * pi) return 0.5 * (std::sin(0.5 * x) + 1.0);
  if (x > -3.0 * pi && x <= -pi) return -std::cos(x) - 1.0;
  return 0.0;
}

inline double g_base_derivative(double x) {
  constexpr double pi = std::numbers::pi;
  if (x > -pi && x <= 3.0 * pi) return 0.25 * std::cos(0.5 * x);
  if (x > -3.0 * pi && x <= -pi) return std::sin(x);
  return 0.0;
}

/// Integral of g_base from -pi to x, in closed form per branch.
inline double g_antideriv(double x) {
  constexpr double pi = std::numbers::pi;
  if (x <= -3.0 * pi) return 2.0 * pi;
  if (x <= -pi) return -std::sin(x) - x - pi;
  if (x <= 3.0 * pi) return 0.5 * (x - 2.0 * std::cos(0.5 * x) + pi);
  return 2.0 * pi;
}

/// Normalization of the hard instances tuned to a sample budget T.
struct HardInstanceParams {
  double T = 0.0;
  double y0 = 0.0;
  double x0 = 0.0;
  double eps = 0.0;

  static HardInstanceParams for_budget(double T, const FunctionClassParams& p) {
    if (!(T >= 1.0)) {
      throw TooSmallBudget("hard instance: T must be a positive integer");
    }
    HardInstanceParams h;
    h.T = T;
    h.y0 = 1.0 / (std::numbers::pi * std::sqrt(T));
    h.x0 = std::cbrt(h.y0 / p.rho);
    const double ratio = h.y0 / h.x0;
    h.eps = ratio * ratio / (128.0 * p.M);
    return h;
  }

  /// y0 / x0^2, the amplitude of the second-derivative perturbation.
  double curvature_amplitude() const { return y0 / (x0 * x0); }
};

namespace detail {

class QuadraticImpl final : public ObjectiveImpl {
 public:
  QuadraticImpl(SymmetricMatrix a, Vector b, Vector minimizer)
      : a_(std::move(a)), b_(std::move(b)), minimizer_(std::move(minimizer)) {}

  double value(const Vector& x) const override { return 0.5 * x.dot(a_ * x) + b_.dot(x); }
  Vector gradient(const Vector& x) const override { return a_ * x + b_; }
  SymmetricMatrix hessian(const Vector&) const override { return a_; }
  std::optional<Vector> analytic_minimizer() const override { return minimizer_; }

 private:
  SymmetricMatrix a_;
  Vector b_;
  Vector minimizer_;
};

class CubicPerturbedImpl final : public ObjectiveImpl {
 public:
  CubicPerturbedImpl(double curvature, double rho) : c_(curvature), rho_(rho) {}

  double value(const Vector& x) const override {
    return 0.5 * c_ * x.squaredNorm() + rho_ / 6.0 * x.array().cube().sum();
  }
  Vector gradient(const Vector& x) const override {
    return c_ * x + 0.5 * rho_ * x.cwiseProduct(x);
  }
  SymmetricMatrix hessian(const Vector& x) const override {
    return SymmetricMatrix::diagonal(Vector::Constant(x.size(), c_) + rho_ * x);
  }

 private:
  double c_;
  double rho_;
};

class HardInstanceImpl final : public ObjectiveImpl {
 public:
  HardInstanceImpl(std::vector<int> s, double M, HardInstanceParams h)
      : s_(std::move(s)), M_(M), h_(h) {}

  double value(const Vector& x) const override {
    double acc = 0.0;
    for (std::size_t j = 0; j < s_.size(); ++j) acc += term(j, x(static_cast<Eigen::Index>(j)));
    return acc;
  }
  Vector gradient(const Vector& x) const override {
    Vector g(x.size());
    for (std::size_t j = 0; j < s_.size(); ++j) {
      g(static_cast<Eigen::Index>(j)) = term_derivative(j, x(static_cast<Eigen::Index>(j)));
    }
    return g;
  }
  SymmetricMatrix hessian(const Vector& x) const override {
    Vector diag(x.size());
    for (std::size_t j = 0; j < s_.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      diag(k) = 2.0 * M_ + h_.curvature_amplitude() * g_base_derivative(sign(j) * x(k) / h_.x0);
    }
    return SymmetricMatrix::diagonal(diag);
  }
  std::optional<double> coordinate_derivative(std::size_t j, double t) const override {
    return term_derivative(j, t);
  }

 private:
  double sign(std::size_t j) const { return s_[j] == 1 ? 1.0 : -1.0; }
  double term(std::size_t j, double t) const {
    return M_ * t * t + h_.y0 * g_antideriv(sign(j) * t / h_.x0);
  }
  double term_derivative(std::size_t j, double t) const {
    return 2.0 * M_ * t + sign(j) * (h_.y0 / h_.x0) * g_base(sign(j) * t / h_.x0);
  }

  std::vector<int> s_;
  double M_;
  HardInstanceParams h_;
};

class CustomImpl final : public ObjectiveImpl {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradFn = std::function<Vector(const Vector&)>;
  using HessFn = std::function<SymmetricMatrix(const Vector&)>;

  CustomImpl(ValueFn v, GradFn g, HessFn h)
      : value_(std::move(v)), grad_(std::move(g)), hess_(std::move(h)) {}

  double value(const Vector& x) const override { return value_(x); }
  Vector gradient(const Vector& x) const override { return grad_(x); }
  SymmetricMatrix hessian(const Vector& x) const override { return hess_(x); }

 private:
  ValueFn value_;
  GradFn grad_;
  HessFn hess_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Families.

/// f(x) = 1/2 x^T A x + b^T x. The Hessian is constant, so A1 holds for any rho.
inline Objective make_quadratic(const SymmetricMatrix& a, const Vector& b,
                                const FunctionClassParams& params) {
  params.validate();
  if (a.dim() == 0 || static_cast<std::size_t>(b.size()) != a.dim()) {
    throw NotInClass("make_quadratic: A and b have inconsistent dimensions");
  }
  const EigenDecomp e = eig_sym(a);
  if (e.min_value() < params.M * (1.0 - 1e-12)) {
    throw NotInClass("make_quadratic: minimum eigenvalue " + std::to_string(e.min_value()) +
                     " is below M = " + std::to_string(params.M));
  }
  const Vector minimizer = -(e.vectors * (e.values.cwiseInverse().asDiagonal() *
                                          (e.vectors.transpose() * b)));
  if (minimizer.norm() > params.R) {
    throw NotInClass("make_quadratic: minimizer norm " + std::to_string(minimizer.norm()) +
                     " exceeds R = " + std::to_string(params.R));
  }
  return Objective(std::make_shared<detail::QuadraticImpl>(a, b, minimizer), a.dim(), params,
                   Family::kQuadratic, false);
}

/// f(x) = (M/2)||x||^2 + (rho/6) sum_i x_i^3 with Hessian M I + rho diag(x).
/// Satisfies A1 with equality; M may be zero. Never strongly convex on all of
/// R^d, so it is flagged estimator-only.
inline Objective make_cubic_perturbed(const FunctionClassParams& params, std::size_t d) {
  if (d == 0) throw NotInClass("make_cubic_perturbed: dimension must be at least 1");
  if (!(params.rho > 0.0) || !(params.M >= 0.0)) {
    throw NotInClass("make_cubic_perturbed: need rho > 0 and M >= 0");
  }
  return Objective(std::make_shared<detail::CubicPerturbedImpl>(params.M, params.rho), d, params,
                   Family::kCubicPerturbed, true);
}

/// Separable product of one-dimensional hard instances,
/// f_s(x) = sum_j f_{s_j}(x_j), with
///   f_1(t) = M t^2 + y0 G(t/x0),  f_2(t) = M t^2 + y0 G(-t/x0),
/// where G is the antiderivative of g_base from -pi.
inline Objective make_hard_instance_product(const std::vector<int>& s, double T,
                                            const FunctionClassParams& params) {
  params.validate();
  if (s.empty()) throw NotInClass("hard instance: empty sign pattern");
  for (int v : s) {
    if (v != 1 && v != 2) throw NotInClass("hard instance: entries of s must be 1 or 2");
  }
  const HardInstanceParams h = HardInstanceParams::for_budget(T, params);
  // f'' >= 2M - (5/4) y0/x0^2 is the floor used for the class check.
  if (2.0 * params.M - 1.25 * h.curvature_amplitude() <= params.M) {
    throw TooSmallBudget("hard instance: T = " + std::to_string(T) +
                         " too small for the strong-convexity floor");
  }
  return Objective(std::make_shared<detail::HardInstanceImpl>(s, params.M, h), s.size(), params,
                   Family::kHardInstance, false);
}

inline Objective make_hard_instance_1d(int which, double T, const FunctionClassParams& params) {
  return make_hard_instance_product(std::vector<int>{which}, T, params);
}

/// Arbitrary smooth test function given by callables; always estimator-only.
inline Objective make_custom(std::size_t d, detail::CustomImpl::ValueFn value,
                             detail::CustomImpl::GradFn grad, detail::CustomImpl::HessFn hess,
                             const FunctionClassParams& params) {
  return Objective(std::make_shared<detail::CustomImpl>(std::move(value), std::move(grad),
                                                        std::move(hess)),
                   d, params, Family::kCustom, true);
}

// ---------------------------------------------------------------------------
// Minimizers and membership.

/// Root of a nondecreasing scalar function on [lo, hi] by bisection, stopping
/// once |f| <= tol or the bracket has collapsed to adjacent doubles.
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) {
    throw NoBracket("bisect_root: derivative does not change sign on the bracket");
  }
  if (std::abs(flo) <= tol) return lo;
  if (std::abs(fhi) <= tol) return hi;
  double best = std::abs(flo) < std::abs(fhi) ? lo : hi;
  double best_abs = std::min(std::abs(flo), std::abs(fhi));
  for (int iter = 0; iter < 2000; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (std::abs(fm) < best_abs) {
      best = mid;
      best_abs = std::abs(fm);
    }
    if (best_abs <= tol) break;
    if (fm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

/// Global minimizer: analytic when the family has one, otherwise coordinate-wise
/// bisection on the monotone derivative over [-R, R] to |f'| <= 1e-12 M.
inline Vector true_minimizer(const Objective& obj) {
  if (auto m = obj.impl().analytic_minimizer()) return *m;
  if (obj.estimator_only()) {
    throw NotInClass("true_minimizer: objective is not strongly convex");
  }
  const double R = obj.params().R;
  const double tol = 1e-12 * obj.params().M;
  Vector x(static_cast<Eigen::Index>(obj.dim()));
  for (std::size_t j = 0; j < obj.dim(); ++j) {
    if (!obj.impl().coordinate_derivative(j, 0.0)) {
      throw NumericalFailure("true_minimizer: no analytic or separable structure");
    }
    auto deriv = [&](double t) { return *obj.impl().coordinate_derivative(j, t); };
    x(static_cast<Eigen::Index>(j)) = bisect_root(deriv, -R, R, tol);
  }
  return x;
}

/// f(x*) for the global minimizer.
inline double optimal_value(const Objective& obj) { return obj.value(true_minimizer(obj)); }

struct MembershipReport {
  bool a1 = true;  // Lipschitz Hessian
  bool a2 = true;  // strong convexity
  bool a3 = true;  // minimizer within radius R
  double worst_a1_ratio = 0.0;  // max ||dH||_F / (rho ||dx||)
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double minimizer_norm = std::numeric_limits<double>::quiet_NaN();

  bool all() const noexcept { return a1 && a2 && a3; }
};

using PointPair = std::pair<Vector, Vector>;

inline MembershipReport check_membership(const Objective& obj, const std::vector<PointPair>& grid,
                                         double tol = 1e-9) {
  if (grid.empty()) throw Error("check_membership: empty probe grid");
  const FunctionClassParams& p = obj.params();
  MembershipReport rep;
  auto probe_a2 = [&](const Vector& x) {
    const double lmin = min_eigenvalue(obj.hessian(x));
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, lmin);
    if (lmin < p.M * (1.0 - tol)) rep.a2 = false;
  };
  for (const auto& [x, xp] : grid) {
    const double dh = (obj.hessian(x) - obj.hessian(xp)).frobenius_norm();
    const double dx = (x - xp).norm();
    if (dx > 0.0) rep.worst_a1_ratio = std::max(rep.worst_a1_ratio, dh / (p.rho * dx));
    if (dh > p.rho * dx * (1.0 + tol)) rep.a1 = false;
    probe_a2(x);
    probe_a2(xp);
  }
  try {
    rep.minimizer_norm = true_minimizer(obj).norm();
    rep.a3 = rep.minimizer_norm <= p.R;
  } catch (const NoBracket&) {
    rep.a3 = false;
  } catch (const NotInClass&) {
    rep.a3 = false;
  }
  return rep;
}

}  // namespace zoopt
