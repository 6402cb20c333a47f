#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace elastic {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller handed in data that violates an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// Internal state no longer satisfies a documented invariant.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Operation called out of order (stepping a finished episode, cold predictor).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Configuration is inconsistent or names something unknown.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical blow-up during training: a gradient, loss or objective went non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Ridge system could not be solved.
class FitError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::int64_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  // 1-based line number in the source; the header is line 1.
  std::int64_t row() const noexcept { return row_; }

 private:
  std::int64_t row_;
};

// Metric requested on data that does not define it (no tasks, too few samples).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace elastic
