#pragma once

#include <stdexcept>
#include <string>

namespace stratalloc {

enum class ErrorKind {
  Schema,      // missing column, arity mismatch
  Parse,       // cell does not parse
  Reference,   // dangling identifier between files
  Infeasible,  // problem has no admissible solution
  Convergence, // iterative method gave up
  Invalid,     // argument outside its domain
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorKind::Schema, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::Parse, what) {}
};

class ReferenceError : public Error {
 public:
  explicit ReferenceError(const std::string& what) : Error(ErrorKind::Reference, what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(ErrorKind::Infeasible, what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what) : Error(ErrorKind::Convergence, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::Invalid, what) {}
};

}  // namespace stratalloc
