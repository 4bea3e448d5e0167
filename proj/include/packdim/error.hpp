#pragma once

#include <stdexcept>
#include <string>

namespace packdim {

/// Bad argument or precondition violation (CLI exit code 2).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested object would exceed a configured size cap (exit code 2).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Malformed input file (exit code 2).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An estimator could not produce a value from the data it was given (exit code 3).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace packdim
