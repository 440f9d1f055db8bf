#pragma once

#include <stdexcept>
#include <string>

namespace ecgr {

// Shapes, hyperparameters or options that cannot work together.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller-supplied data violates a precondition (unnormalized segment, short signal, ...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A forward pass produced NaN/Inf, usually unbounded input to the power terms.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss; the model is left at its last good state.
class TrainingDivergence : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ecgr
