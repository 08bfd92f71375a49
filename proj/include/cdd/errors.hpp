#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdd {

// Base of every error thrown by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values (fractions, empty registry, bad flags).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input text: JSON syntax, corrupt model files.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Well-formed input that violates a file schema (missing field, size mismatch).
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Bad arguments to an operation (OOV ids, empty prefix, probability out of range).
class InputError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Negative sampling has nothing to draw from.
class SamplingError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdd
