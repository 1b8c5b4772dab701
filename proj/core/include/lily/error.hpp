#pragma once

#include <stdexcept>
#include <string>

namespace lily {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument shape or value outside an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A latent-process specification that violates its invariants.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// Evaluation left the domain where a quantity is defined (log of zero
/// density, non-finite gradient, diverging trajectory, ...).
class NumericDomain : public Error {
 public:
  using Error::Error;
};

/// Failure while reading a serialized artifact. `kind` lets callers tell a
/// corrupt file apart from one written by a newer format.
class LoadError : public Error {
 public:
  enum class Kind { kIo, kMalformedHeader, kSizeMismatch, kUnsupportedVersion };

  LoadError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace lily
