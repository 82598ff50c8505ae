#pragma once

#include <stdexcept>
#include <string>

namespace lpeq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// A dividend coefficient left the bounds |mu| <= M, 1/M <= sigma <= M.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(const std::string& what, double t, double d, double value)
      : Error(what), t_(t), d_(d), value_(value) {}
  double t() const noexcept { return t_; }
  double d() const noexcept { return d_; }
  double value() const noexcept { return value_; }

 private:
  double t_;
  double d_;
  double value_;
};

/// Time step too coarse for the explicit scheme or the one-step integrator.
class StepSizeError : public Error {
 public:
  StepSizeError(const std::string& what, std::size_t suggested_min_steps)
      : Error(what), suggested_min_steps_(suggested_min_steps) {}
  std::size_t suggested_min_steps() const noexcept { return suggested_min_steps_; }

 private:
  std::size_t suggested_min_steps_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class TruncationFailure : public Error {
 public:
  using Error::Error;
};

class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

class WrongBackend : public Error {
 public:
  using Error::Error;
};

class GridCoverageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpeq
