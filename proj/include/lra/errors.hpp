#pragma once

#include <stdexcept>
#include <string>

namespace lra {

/// Shape or conformability violation (non-square input, mismatched lengths, ...).
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input required to be symmetric was not, beyond tolerance.
struct SymmetryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Effectively rank-deficient matrix where full rank is required.
struct SingularityError : std::runtime_error {
  SingularityError(const std::string& what, double smallest, double largest)
      : std::runtime_error(what), sigma_min(smallest), sigma_max(largest) {}
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

/// Cholesky / inverse square root asked of an indefinite matrix.
struct NotPositiveDefiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Attacked column of the Gram inverse is all zero; no direction to push.
struct DegenerateTargetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Recovering a data point from a scaled solution produced s^2 <= 0.
struct RecoveryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative kernel failed to bracket/converge; carries diagnostics text.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Relaxation order below the minimum the constraint degrees demand.
struct OrderTooLowError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Moment vector is missing an entry the requested matrix needs.
struct IncompleteMomentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line_number)
      : std::runtime_error(what), line(line_number) {}
  std::size_t line = 0;
};

}  // namespace lra
