#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace momentprop {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (spec text, files, mismatched operands).
/// Line and column are 1-based; zero means "no position".
class SpecError : public Error {
 public:
  explicit SpecError(const std::string& message, std::size_t line = 0, std::size_t column = 0);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Moment-basis completion exceeded a configured guard.
class CompileError : public Error {
 public:
  using Error::Error;
};

/// A propagated or simulated value became non-finite, or a runtime input was missing.
class PropagationError : public Error {
 public:
  using Error::Error;
};

/// The request is well-formed but outside what this library computes.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace momentprop
