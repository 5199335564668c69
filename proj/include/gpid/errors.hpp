#pragma once

#include <stdexcept>
#include <string>

namespace gpid {

// Every error raised deliberately by the library derives from this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: wrong shapes, non-finite values, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A factorization or decomposition failed on the given numbers.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Second moments that cannot come from any joint distribution
// (e.g. indefinite noise covariance beyond round-off).
class ModelError : public Error {
 public:
  using Error::Error;
};

// Argument lies outside the domain of the operation (infeasible noise coupling).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The caller used an operation on an input it does not support.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Internal consistency check failed; indicates a bug upstream.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpid
