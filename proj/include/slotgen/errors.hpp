// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace slotgen {

/// Base of every error raised by the library. The CLI maps each kind onto an
/// exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents do not fit the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied input violates a precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Misuse of an object's lifecycle (e.g. backward twice on one graph).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed text or binary file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A structurally valid record breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent model or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf encountered during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint written by an incompatible format revision.
class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace slotgen
