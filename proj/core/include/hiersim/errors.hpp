#pragma once

#include <stdexcept>
#include <string>

namespace hiersim {

enum class ErrorKind {
  SyntaxError,
  UnsupportedGate,
  QubitOutOfRange,
  InvalidSize,
  NotAPermutation,
  InfeasibleShape,
  NoPlanWithinLimit,
  BudgetExceeded,
  Stuck,
  SizeExceeded,
  NoFeasibleSegmentation,
  NotInsular,
  LocalityViolation,
  TooLarge,
  DimensionMismatch,
  InvalidArgument,
  IoError,
  PlanViolation,
};

const char *error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the QASM reader; line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string &what)
      : Error(ErrorKind::SyntaxError,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace hiersim
