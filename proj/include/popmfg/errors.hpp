#pragma once

#include <stdexcept>
#include <string>

namespace popmfg {

// Every library failure derives from Error so the CLI can map categories to
// exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

// Malformed or out-of-contract experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace popmfg
