#pragma once

#include <stdexcept>
#include <string>

namespace sentirag {

// Root of all engine errors. Callers that only need a message catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied data (rows, values, arguments).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Similarity is undefined (zero vector, two empty token sets).
class UndefinedSimilarity : public Error {
 public:
  using Error::Error;
};

// Backend output could not be mapped to a sentiment label.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Transient remote failure; the caller may retry.
class RetryableError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sentirag
