#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treeshape {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data (files, trees, collections).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical contract violations (bad grids, rotations, warps, domains).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateTree : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateBranch : public DataError {
 public:
  using DataError::DataError;
};

class DisconnectedSkeleton : public DataError {
 public:
  using DataError::DataError;
};

class CyclicSkeleton : public DataError {
 public:
  using DataError::DataError;
};

class StructureMismatch : public DataError {
 public:
  using DataError::DataError;
};

class EmptyCollection : public DataError {
 public:
  using DataError::DataError;
};

class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedVersion : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class GridMismatch : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidRotation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidWarp : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace treeshape
