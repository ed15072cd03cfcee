#pragma once

#include <stdexcept>
#include <string>

namespace vndiff {

// Numeric failures map to CLI exit code 2, usage errors to 1.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnstableError : NumericError {
  using NumericError::NumericError;
};

struct TruncationTooSmallError : NumericError {
  using NumericError::NumericError;
};

struct NoEquilibriumError : NumericError {
  using NumericError::NumericError;
};

struct NonPositiveVError : NumericError {
  using NumericError::NumericError;
};

struct EtaNonPositiveError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DivergentError : NumericError {
  using NumericError::NumericError;
};

struct DivisionByZeroError : NumericError {
  using NumericError::NumericError;
};

struct NonIntegrableError : NumericError {
  using NumericError::NumericError;
};

struct ZeroDenominatorError : NumericError {
  using NumericError::NumericError;
};

}  // namespace vndiff
