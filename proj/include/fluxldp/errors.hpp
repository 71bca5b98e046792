#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fluxldp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad DSL text, bad JSON, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// DSL syntax error carrying a 1-based source position.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                        ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Numerical breakdown: non-finite rates, blow-up, solver non-convergence, event cap.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An exact oracle could not be evaluated within its limits (state cap, truncation mass).
class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace fluxldp
