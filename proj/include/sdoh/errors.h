#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdoh {

// Base of every error raised by the toolkit. The CLI maps the subclasses to
// process exit codes (config = 2, data = 3, network = 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, mapping or statement files, invalid arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Malformed or inconsistent corpus data.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownLabelError : public ParseError {
 public:
  UnknownLabelError(std::size_t line, const std::string& label)
      : ParseError(line, "unknown label '" + label + "'"), label_(label) {}

  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

class InvalidSchemeError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class GenerationError : public DataError {
 public:
  using DataError::DataError;
};

class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdoh
