#pragma once

#include <stdexcept>
#include <string>

namespace ridgekit {

/// Base class for all ridgekit failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract inputs (shapes, empty grids, non-finite data).
struct InvalidInputError : Error {
  using Error::Error;
};

/// A solve that needed full rank met a rank-deficient system.
struct RankDeficiencyError : Error {
  using Error::Error;
};

/// Parameter outside its mathematical domain (negative variance, phi >= 1, ...).
struct DomainError : Error {
  using Error::Error;
};

/// Input is degenerate for the requested formula (zero denominator and the like).
struct DegenerateInputError : Error {
  using Error::Error;
};

/// A leverage R^lambda_ii too close to 1 for the LOO division to be meaningful.
struct LeverageError : Error {
  using Error::Error;
};

/// Gradient descent diverged; the step size violates step < 2/d1^2.
struct StepSizeError : Error {
  using Error::Error;
};

/// An iterative solver ran out of iterations before meeting its tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

}  // namespace ridgekit
