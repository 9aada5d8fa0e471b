#pragma once

#include <stdexcept>
#include <string>

namespace becaus {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller-supplied data or configuration is unusable (bad shape, too short,
/// malformed file). The CLI maps these to the input-error exit code.
class InputError : public Error {
 public:
  using Error::Error;
};

class LengthError : public InputError {
 public:
  using InputError::InputError;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : InputError(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Numerical or algorithmic failure (unobservable system, rank deficit,
/// solver divergence). The CLI maps these to the numerical-failure exit code.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class UnobservableSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ExhaustionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IdentifiabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DataIntegrityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficientRegressionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateVarianceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateReferenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, int iterations, double primal_residual,
              double dual_residual)
      : NumericalError(what),
        iterations_(iterations),
        primal_residual_(primal_residual),
        dual_residual_(dual_residual) {}
  int iterations() const noexcept { return iterations_; }
  double primal_residual() const noexcept { return primal_residual_; }
  double dual_residual() const noexcept { return dual_residual_; }

 private:
  int iterations_;
  double primal_residual_;
  double dual_residual_;
};

}  // namespace becaus
