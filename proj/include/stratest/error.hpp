#pragma once

#include <stdexcept>
#include <string>

namespace stratest {

/// Malformed or out-of-contract input: bad sizes, non-finite values,
/// duplicate strata, unparseable files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation is undefined for otherwise well-formed input, e.g. a
/// census stratum under the dual transform or a singular optimum.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A realized sample makes an estimator undefined (zero denominator,
/// non-positive base under a fractional exponent).
class DegenerateSample : public DegenerateError {
 public:
  using DegenerateError::DegenerateError;
};

}  // namespace stratest
