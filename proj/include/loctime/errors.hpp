#pragma once

#include <stdexcept>
#include <string>

namespace loctime {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter or configuration (H outside (0,1), d < 1, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Evaluation exactly at a point where the value is unbounded.
class SingularPointError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A time interval of zero length where a positive length is required.
class DegenerateIntervalError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Operation applied to an input it is not defined for.
class MisuseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Requested operation is not supported for this kind of input.
class UnsupportedError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Simulation set-up that cannot meet its stated bias budget.
class ConfigurationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Tolerance not reached within the evaluation budget. Carries the best
/// estimate obtained so far.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

/// Two independent computation routes disagree; signals an internal bug.
class ConsistencyError : public AccuracyError {
 public:
  using AccuracyError::AccuracyError;
};

/// Integral not finite: the renormalization condition 2N(1-H) - dH > -1 fails.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(const std::string& what, int minimal_n) : Error(what), minimal_n_(minimal_n) {}

  int minimal_n() const noexcept { return minimal_n_; }

 private:
  int minimal_n_;
};

/// Integrand with a non-integrable singularity passed to an integrator.
class NonIntegrableError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace loctime
