#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dialeval {

// Base of every error the library raises. Subclasses name the failure kind so
// callers (the CLI in particular) can report which stage broke.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A required file or directory could not be opened.
class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& what) : Error("resource error: " + what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("configuration error: " + what) {}
};

class ValidationError : public Error {
 public:
  ValidationError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format error: " + what) {}
};

// A statistic or similarity is undefined for the given input
// (zero-norm vector, constant series, all pairs tied, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// A value left the domain of a function (e.g. a logarithm of a non-positive number).
class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

class ServiceError : public Error {
 public:
  explicit ServiceError(const std::string& what) : Error("external service error: " + what) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error("protocol error: " + what) {}
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& what) : Error("alignment error: " + what) {}
};

}  // namespace dialeval
