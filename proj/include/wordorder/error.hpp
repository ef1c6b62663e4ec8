#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wordorder {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data (CLI exit code 3). Most errors derive from this.
class DataError : public Error {
 public:
  using Error::Error;
};

class MalformedSpanError : public DataError {
 public:
  using DataError::DataError;
};

/// A caller broke a documented precondition, e.g. passed an id outside the model vocabulary.
class ContractError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class AlignmentError : public DataError {
 public:
  using DataError::DataError;
};

class VocabularyMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class LoadError : public DataError {
 public:
  using DataError::DataError;
};

class TrainingError : public DataError {
 public:
  using DataError::DataError;
};

/// Parse failure that knows which input line it came from (1-based).
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace wordorder
