#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sizes of two inputs that must agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A parameter or configuration value violates its domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The polar form was evaluated at an amplitude below the singularity floor.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : Error(what), row_(row), column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Random graph generation could not realize the requested degree sequence.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace slnet
