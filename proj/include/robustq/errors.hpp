#pragma once

#include <stdexcept>
#include <string>

namespace robustq {

// Malformed input: bad dimensions, out-of-range parameters, inconsistent configs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The behavior chain is reducible or periodic.
class AssumptionViolated : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iteration failed to meet its tolerance within its cap.
class NumericFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An estimator was asked for a value before it holds enough samples.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robustq
