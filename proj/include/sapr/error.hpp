#pragma once

#include <stdexcept>
#include <string>

namespace sapr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A size parameter is out of its admissible range (e.g. N = 0).
class InvalidDimension : public Error {
public:
  using Error::Error;
};

/// Two operands whose sizes must agree do not.
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// Input violates a documented precondition (x ~ y, bad group parameters, ...).
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// Request outside what an algorithm supports (L too large, latent dim > 2 for the grid oracle).
class Unsupported : public Error {
public:
  using Error::Error;
};

/// Bounded retry loop gave up.
class NumericalFailure : public Error {
public:
  using Error::Error;
};

/// Malformed file or stream.
class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace sapr
