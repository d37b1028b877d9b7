#pragma once

#include <stdexcept>
#include <string>

namespace wassquant {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two objects that must live in the same ambient space do not.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A numeric argument is outside its documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file or document could not be parsed or violates its schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was violated (e.g. the transport solver failed to
/// converge on valid input). Never expected in practice.
class InternalFault : public Error {
 public:
  using Error::Error;
};

}  // namespace wassquant
