#pragma once

#include <stdexcept>
#include <string>

namespace dpct {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// A precondition on an argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument_error"; }
};

/// A file or resource could not be read.
class LoadError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "load_error"; }
};

/// A file was read but its payload does not have the expected layout.
class FormatError : public LoadError {
 public:
  using LoadError::LoadError;
  const char* kind() const noexcept override { return "format_error"; }
};

/// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric_error"; }
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ArgumentError(msg);
}

}  // namespace dpct
