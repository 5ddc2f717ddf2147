#pragma once

#include <stdexcept>
#include <string>

namespace rfpa {

// Base of every error thrown by the library. The CLI maps each subclass to
// its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Precondition or argument violations (bad geometry, bad grids, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A circuit that parsed but failed validate_circuit.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  explicit SingularMatrixError(std::string suspect)
      : Error("singular MNA matrix near '" + suspect + "'"),
        suspect_(std::move(suspect)) {}

  const std::string& suspect() const { return suspect_; }

 private:
  std::string suspect_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (last residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfpa
