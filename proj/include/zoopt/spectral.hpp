#pragma once

// Dense symmetric linear algebra for the estimators and the optimizer:
// eigendecomposition, eigenvalue clipping, inverse square roots, the
// clipped-Newton step (smallest clipping level meeting a norm cap) and
// uniform sampling on the unit sphere.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "zoopt/error.hpp"
#include "zoopt/random.hpp"

namespace zoopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric d x d matrix. The upper triangle of whatever is passed in
/// is authoritative and mirrored, so the stored matrix is exactly symmetric.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(const Matrix& upper) : data_(upper.rows(), upper.cols()) {
    if (upper.rows() != upper.cols()) {
      throw Error("SymmetricMatrix: matrix is not square");
    }
    const Eigen::Index d = upper.rows();
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) {
        data_(i, j) = upper(i, j);
        data_(j, i) = upper(i, j);
      }
    }
  }

  static SymmetricMatrix identity(std::size_t d) {
    return SymmetricMatrix(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  }

  static SymmetricMatrix diagonal(const Vector& diag) {
    return SymmetricMatrix(Matrix(diag.asDiagonal()));
  }

  /// V diag(values) V^T.
  static SymmetricMatrix from_spectrum(const Matrix& vectors, const Vector& values) {
    return SymmetricMatrix(vectors * values.asDiagonal() * vectors.transpose());
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Matrix& dense() const noexcept { return data_; }

  double frobenius_norm() const { return data_.norm(); }

  SymmetricMatrix scaled(double s) const { return SymmetricMatrix(Matrix(s * data_)); }

  friend SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return SymmetricMatrix(Matrix(a.data_ - b.data_));
  }
  friend SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    return SymmetricMatrix(Matrix(a.data_ + b.data_));
  }
  friend Vector operator*(const SymmetricMatrix& a, const Vector& v) { return a.data_ * v; }

 private:
  Matrix data_;
};

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
struct EigenDecomp {
  Vector values;
  Matrix vectors;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.size()); }
  double min_value() const { return values(0); }
  double max_value() const { return values(values.size() - 1); }
  SymmetricMatrix reconstruct() const { return SymmetricMatrix::from_spectrum(vectors, values); }
};

inline EigenDecomp eig_sym(const SymmetricMatrix& h) {
  if (!h.dense().allFinite()) {
    throw NumericalFailure("eig_sym: non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.dense());
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("eig_sym: eigensolver did not converge");
  }
  return EigenDecomp{solver.eigenvalues(), solver.eigenvectors()};
}

inline double min_eigenvalue(const SymmetricMatrix& h) { return eig_sym(h).min_value(); }

/// Same eigenvectors, every eigenvalue replaced by max(lambda, m). This is the
/// Frobenius-norm projection onto {S : S - mI is positive semidefinite}.
inline SymmetricMatrix clip_min_eig(const EigenDecomp& e, double m) {
  return SymmetricMatrix::from_spectrum(e.vectors, e.values.cwiseMax(m));
}

inline SymmetricMatrix clip_min_eig(const SymmetricMatrix& h, double m) {
  return clip_min_eig(eig_sym(h), m);
}

/// Symmetric positive definite Z with Z * Z = H^{-1}.
inline SymmetricMatrix inv_sqrt_sym(const SymmetricMatrix& h) {
  const EigenDecomp e = eig_sym(h);
  if (!(e.min_value() > 0.0)) {
    throw NotPositiveDefinite("inv_sqrt_sym: minimum eigenvalue " + std::to_string(e.min_value()) +
                              " is not positive");
  }
  return SymmetricMatrix::from_spectrum(e.vectors, e.values.cwiseSqrt().cwiseInverse());
}

inline SymmetricMatrix inverse_spd(const SymmetricMatrix& h) {
  const EigenDecomp e = eig_sym(h);
  if (!(e.min_value() > 0.0)) {
    throw NotPositiveDefinite("inverse_spd: matrix is not positive definite");
  }
  return SymmetricMatrix::from_spectrum(e.vectors, e.values.cwiseInverse());
}

/// Largest singular value; for a symmetric matrix, max |eigenvalue|.
inline double max_singular_value(const SymmetricMatrix& z) {
  const EigenDecomp e = eig_sym(z);
  return std::max(std::abs(e.min_value()), std::abs(e.max_value()));
}

struct ClippedStep {
  double m_star = 0.0;
  Vector step;
};

namespace detail {

// Squared norm of H_m^{-1} m_hat given eigenbasis coefficients c.
inline double clipped_step_norm2(const Vector& values, const Vector& coeffs, double m) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double l = std::max(values(i), m);
    acc += (coeffs(i) * coeffs(i)) / (l * l);
  }
  return acc;
}

inline Vector clipped_solve(const EigenDecomp& e, const Vector& coeffs, double m) {
  Vector scaled(coeffs.size());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    scaled(i) = coeffs(i) / std::max(e.values(i), m);
  }
  return e.vectors * scaled;
}

}  // namespace detail

/// Clipped-Newton step: the smallest clipping level m* (never below the
/// smallest eigenvalue of H) such that ||H_{m*}^{-1} m_hat|| <= max_norm,
/// together with step = H_{m*}^{-1} m_hat.
///
/// phi(m) = ||H_m^{-1} m_hat||^2 is nonincreasing in m. When the unclipped
/// step already satisfies the cap, m* is the minimum eigenvalue. Otherwise m*
/// solves phi(m*) = max_norm^2 and is located by bisection on
/// [lambda_min, ||m_hat|| / max_norm], where the upper end is always feasible.
/// The returned level is the feasible end of the final bracket, so the step
/// norm never exceeds the cap.
inline ClippedStep solve_mstar(const EigenDecomp& e, const Vector& m_hat, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw Error("solve_mstar: norm cap must be positive");
  }
  if (!(e.min_value() > 0.0)) {
    throw NotPositiveDefinite("solve_mstar: H must be positive definite");
  }
  const Vector coeffs = e.vectors.transpose() * m_hat;
  const double cap2 = max_norm * max_norm;
  const double lo0 = e.min_value();
  if (detail::clipped_step_norm2(e.values, coeffs, lo0) <= cap2) {
    return ClippedStep{lo0, detail::clipped_solve(e, coeffs, lo0)};
  }
  double lo = lo0;
  double hi = std::max(lo0, m_hat.norm() / max_norm);
  // The bracket end is feasible in exact arithmetic; nudge it up if rounding
  // says otherwise.
  while (detail::clipped_step_norm2(e.values, coeffs, hi) > cap2) {
    hi = std::nextafter(hi, std::numeric_limits<double>::infinity()) * (1.0 + 1e-15);
  }
  constexpr double kRelTol = 1e-12;
  for (int iter = 0; iter < 200 && (hi - lo) > kRelTol * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (detail::clipped_step_norm2(e.values, coeffs, mid) > cap2) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return ClippedStep{hi, detail::clipped_solve(e, coeffs, hi)};
}

inline ClippedStep solve_mstar(const SymmetricMatrix& h, const Vector& m_hat, double max_norm) {
  return solve_mstar(eig_sym(h), m_hat, max_norm);
}

/// Uniform draw from the unit sphere S^{d-1}: normalized i.i.d. standard normals.
template <class URBG>
Vector sample_unit_sphere(std::size_t d, URBG& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(static_cast<Eigen::Index>(d));
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      u(i) = normal(rng);
    }
    norm = u.norm();
  } while (!(norm > 0.0));
  return u / norm;
}

}  // namespace zoopt
