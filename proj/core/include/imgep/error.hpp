#pragma once

#include <stdexcept>
#include <string>

namespace imgep {

// Bad input to an operation: shape mismatch, out-of-domain value, unknown name.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called on an object that is not ready for it.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite intermediate values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imgep
