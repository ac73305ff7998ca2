#pragma once

#include <stdexcept>
#include <string>

namespace j6 {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions disagree with each other or with the instance.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A target or embedding index lies outside [0, V).
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates its documented range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent instance/trace file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A loss or gradient became non-finite during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling exhausted its attempt budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace j6
