// Copyright The dfnopt Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef DFNOPT_ERROR_HPP
#define DFNOPT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dfnopt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Two fractures overlap in a 2D region, or some other configuration the
/// trace computation cannot represent.
class UnsupportedGeometryError : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mesh size or iteration budget exceeded a configured cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Failure of a local factorization or solve. Carries the fracture index
/// (or -1 for global systems).
class LinearAlgebraError : public Error {
 public:
  LinearAlgebraError(int fracture, const std::string& what)
      : Error(fracture >= 0 ? "fracture " + std::to_string(fracture) + ": " + what : what),
        fracture_(fracture) {}
  int fracture() const noexcept { return fracture_; }

 private:
  int fracture_;
};

/// Parse failure with a 1-based line and column.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace dfnopt

#endif  // DFNOPT_ERROR_HPP
