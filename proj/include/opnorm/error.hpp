#pragma once

#include <stdexcept>
#include <string>

namespace opnorm {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// An iterative routine hit its iteration cap.
class ConvergenceError : public Error {
  public:
    using Error::Error;
};

/// A norm pair, geometry, or role combination that has no implementation.
class UnsupportedError : public Error {
  public:
    using Error::Error;
};

/// Input value outside the documented domain (non-finite entries, bad ranges).
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Malformed or incomplete run configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace opnorm
