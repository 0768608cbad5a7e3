#pragma once

#include <stdexcept>
#include <string>

namespace trajfuse {

/// Base of every error raised by the library. Carries no extra state; the
/// concrete type identifies the failure class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite coordinates, out-of-range parameters, empty inputs.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Calibration points collinear or duplicated in the camera frame.
class DegenerateCalibration : public Error {
 public:
  using Error::Error;
};

class InsufficientCandidates : public Error {
 public:
  using Error::Error;
};

class NoValidSubset : public Error {
 public:
  using Error::Error;
};

/// Transitive closure of matches would fuse two tracks of one camera.
class ConflictingMatch : public Error {
 public:
  using Error::Error;
};

class InvalidScenario : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line` is 1-based, 0 when not line-specific.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace trajfuse
