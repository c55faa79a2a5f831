#pragma once

#include <stdexcept>
#include <string>

namespace zoopt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query (or batch of queries) would exceed the oracle's budget.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// The sample budget is too small for the requested construction or schedule.
class TooSmallBudget : public Error {
 public:
  using Error::Error;
};

/// An objective does not belong to the requested function class.
class NotInClass : public Error {
 public:
  using Error::Error;
};

/// The derivative does not change sign on [-R, R].
class NoBracket : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Fewer than three points, or a non-positive value, passed to a log-log fit.
class DegenerateFit : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace zoopt
