#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "zoopt/error.hpp"
#include "zoopt/function_space.hpp"
#include "zoopt/random.hpp"

namespace zoopt {

/// Zero-mean additive observation noise.
struct NoiseModel {
  enum class Kind { kZero, kStdGaussian, kUniformBounded };

  Kind kind = Kind::kStdGaussian;
  double half_width = 0.0;  // only for kUniformBounded: noise ~ U[-a, a]

  static NoiseModel zero() { return {Kind::kZero, 0.0}; }
  static NoiseModel std_gaussian() { return {Kind::kStdGaussian, 0.0}; }
  static NoiseModel uniform_bounded(double a) {
    if (!(a > 0.0) || a > std::sqrt(3.0)) {
      throw ConfigError("uniform noise half-width must lie in (0, sqrt(3)] for unit variance");
    }
    return {Kind::kUniformBounded, a};
  }

  double variance() const {
    switch (kind) {
      case Kind::kZero: return 0.0;
      case Kind::kStdGaussian: return 1.0;
      case Kind::kUniformBounded: return half_width * half_width / 3.0;
    }
    return 0.0;
  }

  template <class URBG>
  double draw(URBG& rng) const {
    switch (kind) {
      case Kind::kZero: return 0.0;
      case Kind::kStdGaussian: return std::normal_distribution<double>(0.0, 1.0)(rng);
      case Kind::kUniformBounded:
        return std::uniform_real_distribution<double>(-half_width, half_width)(rng);
    }
    return 0.0;
  }
};

inline std::string_view noise_name(NoiseModel::Kind k) {
  switch (k) {
    case NoiseModel::Kind::kZero: return "zero";
    case NoiseModel::Kind::kStdGaussian: return "gaussian";
    case NoiseModel::Kind::kUniformBounded: return "uniform";
  }
  return "unknown";
}

/// Budgeted, seeded noisy evaluation channel around an objective. Every query
/// returns f(x) + w with fresh noise w and consumes one unit of budget; a call
/// that would exceed the budget throws before drawing anything.
///
/// The oracle owns two independent streams derived from the master seed: one
/// for observation noise and one for the estimators' random directions. It is
/// single-owner mutable state and must not be shared between threads.
class NoisyOracle {
 public:
  NoisyOracle(Objective objective, NoiseModel noise, std::uint64_t budget, std::uint64_t seed)
      : objective_(std::move(objective)),
        noise_(noise),
        budget_(budget),
        seed_(seed),
        noise_rng_(make_stream(seed, Stream::kNoise)),
        direction_rng_(make_stream(seed, Stream::kDirections)) {}

  double query(const Vector& x) {
    require(1);
    const double y = objective_.value(x) + noise_.draw(noise_rng_);
    ++used_;
    return y;
  }

  /// Mean of n fresh observations at x.
  double query_mean(const Vector& x, std::uint64_t n) {
    if (n == 0) throw Error("query_mean: n must be positive");
    require(n);
    const double fx = objective_.value(x);
    double noise_sum = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) noise_sum += noise_.draw(noise_rng_);
    used_ += n;
    return fx + noise_sum / static_cast<double>(n);
  }

  /// Throws BudgetExhausted unless n more queries fit in the budget.
  void require(std::uint64_t n) const {
    if (n > budget_ - used_) {
      throw BudgetExhausted("oracle budget exhausted: requested " + std::to_string(n) +
                            ", remaining " + std::to_string(budget_ - used_));
    }
  }

  std::uint64_t remaining() const noexcept { return budget_ - used_; }
  std::uint64_t used() const noexcept { return used_; }
  std::uint64_t budget() const noexcept { return budget_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dim() const noexcept { return objective_.dim(); }
  const NoiseModel& noise() const noexcept { return noise_; }

  /// Stream for estimator direction sampling; independent of the noise stream.
  Rng& direction_rng() noexcept { return direction_rng_; }

 private:
  Objective objective_;
  NoiseModel noise_;
  std::uint64_t budget_;
  std::uint64_t used_ = 0;
  std::uint64_t seed_;
  Rng noise_rng_;
  Rng direction_rng_;
};

}  // namespace zoopt
