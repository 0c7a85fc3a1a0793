#pragma once

#include <stdexcept>
#include <string>

namespace quarc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidTopology : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// A generator or solver could not reach its target (e.g. Waxman degree).
class CalibrationFailure : public Error {
 public:
  using Error::Error;
};

// Threshold derivation found no statistically separated evidence.
class CalibrationInconclusive : public Error {
 public:
  using Error::Error;
};

class InfeasibleSplit : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace quarc
