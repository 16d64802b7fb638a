#pragma once

#include <stdexcept>
#include <string>

namespace lts {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or synthetic-graph spec.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (syntax, missing key, wrong JSON type).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Parameter / activation dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise unusable numeric data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace lts
