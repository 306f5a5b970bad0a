#pragma once

#include <stdexcept>
#include <string>

namespace dualfuse {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (files, flags, schemas). CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical or geometric failure on otherwise well-formed input. CLI exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Numeric failures.

class NonConvergent : public NumericError {
 public:
  using NumericError::NumericError;
};

class Singular : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateConfiguration : public NumericError {
 public:
  using NumericError::NumericError;
};

class TooFewPoints : public NumericError {
 public:
  using NumericError::NumericError;
};

class AtInfinity : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateBox : public NumericError {
 public:
  using NumericError::NumericError;
};

class InvalidRegion : public NumericError {
 public:
  using NumericError::NumericError;
};

// Input failures.

class InvariantViolation : public InputError {
 public:
  using InputError::InputError;
};

/// Syntax error in a text format; `what()` always carries the location.
class ParseError : public InputError {
 public:
  ParseError(const std::string& location, const std::string& message)
      : InputError(location + ": " + message), location_(location) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class ClassIndexOutOfRange : public ParseError {
 public:
  using ParseError::ParseError;
};

class UnknownClass : public InputError {
 public:
  using InputError::InputError;
};

/// Missing or mistyped key in a JSON document; `key_path()` is e.g. "narrow.fx".
class SchemaError : public InputError {
 public:
  SchemaError(const std::string& key_path, const std::string& message)
      : InputError(key_path + ": " + message), key_path_(key_path) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

class MissingFrame : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace dualfuse
