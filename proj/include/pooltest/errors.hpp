#pragma once

#include <stdexcept>
#include <string>

namespace pooltest {

/// Malformed or inconsistent arguments (size mismatch, prior out of range, bad pool).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Text or JSON input that cannot be decoded.
class ParseError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// The request is well-formed but exceeds a documented size bound.
class UnsupportedSize : public std::runtime_error {
 public:
  UnsupportedSize(const std::string& what, int bound)
      : std::runtime_error(what + " (supported bound: " + std::to_string(bound) + ")"),
        bound_(bound) {}

  int bound() const noexcept { return bound_; }

 private:
  int bound_;
};

/// An internal budget (memo capacity, state count) was exhausted.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation not allowed in the current state, e.g. recording a result on a completed session.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pooltest
