#pragma once

#include <stdexcept>
#include <string>

namespace joinids {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Attribute/arity mismatch, unknown attribute names, malformed rules.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Non-monotone timestamps fed to a window or engine.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// An operation required a different imputation state.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Invalid tuning parameter (lambda < 1, empty candidate list, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A grid reindex was asked to grow an object's box.
class ContainmentError : public Error {
 public:
  using Error::Error;
};

/// Possible-world enumeration would exceed its cap.
class CombinatorialBlowup : public Error {
 public:
  using Error::Error;
};

/// Malformed input files.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace joinids
