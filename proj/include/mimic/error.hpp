#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mimic {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (movement rules, config ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Query outside the domain of a trajectory or spline.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Captured log cannot be regularized onto a uniform grid.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long last_finite_epoch = -1)
      : Error(what), last_finite_epoch_(last_finite_epoch) {}

  /// -1 when no epoch completed with a finite loss.
  long last_finite_epoch() const noexcept { return last_finite_epoch_; }

 private:
  long last_finite_epoch_;
};

}  // namespace mimic
