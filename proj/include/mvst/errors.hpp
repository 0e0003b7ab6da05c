#ifndef MVST_ERRORS_HPP
#define MVST_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvst {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of a mathematical function (x <= 0, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed parameters or data: shapes, symmetry, positivity.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A floating point computation produced a non-finite or meaningless value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Cholesky failed even after the jitter retry.
class FactorizationError : public NumericalError {
 public:
  FactorizationError(std::string which, const std::string& detail)
      : NumericalError("factorization of " + which + " failed: " + detail),
        which_(std::move(which)) {}

  const std::string& which() const noexcept { return which_; }

 private:
  std::string which_;
};

/// The denominator sum(a_bar * b_i) - N of the location/skewness update
/// vanished, i.e. the latent weights carry no information.
class DegenerateWeightsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Skewness quadratic form below the threshold where the GIG conditional is
/// replaced by its inverse-Gamma limit.
class SkewnessBelowThreshold : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Text that is not well-formed JSON.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Well-formed JSON with missing keys, wrong types or bad values.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Observation with the wrong number of entries.
class DimensionError : public ValidationError {
 public:
  DimensionError(std::size_t index, const std::string& detail)
      : ValidationError("observation " + std::to_string(index) + ": " + detail),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// NaN or infinity found where only finite reals are allowed.
class NonFiniteError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace mvst

#endif  // MVST_ERRORS_HPP
