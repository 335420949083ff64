#pragma once

#include <stdexcept>
#include <string>

namespace dwd {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument: out-of-range hyperparameter, mismatched dimensions, etc.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Data that cannot be used for fitting (one class, non-finite entries, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : DataError(line == 0 ? what : what + " (line " + std::to_string(line) + ")"), line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Model file written by an incompatible schema version.
class VersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Linear system could not be factorized even after jitter escalation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dwd
