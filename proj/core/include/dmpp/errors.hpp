#pragma once

#include <stdexcept>
#include <string>

namespace dmpp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArgumentError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct TrainingError : Error {
  using Error::Error;
};

struct ConditioningError : Error {
  using Error::Error;
};

struct DowndateError : Error {
  using Error::Error;
};

struct EnvironmentError : Error {
  using Error::Error;
};

struct OracleError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace dmpp
