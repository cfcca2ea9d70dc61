#pragma once

#include <stdexcept>
#include <string>

namespace mixfree {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model, class or configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numeric routine could not produce a result (reducible chain, singular
/// covariance, empty search range, non-finite profile value, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mixfree
