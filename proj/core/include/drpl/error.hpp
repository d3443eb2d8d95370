#pragma once

#include <stdexcept>
#include <string>

namespace drpl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Precondition violated by the caller (bad sizes, out-of-range parameters).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A nuisance fit was asked to train on too few rows.
class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

/// Malformed external input (CSV, policy JSON, config JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace drpl
