#pragma once

#include <stdexcept>
#include <string>

namespace etongue {

// Root of every error raised by the library. The CLI maps these to exit code 1,
// the service maps them to 4xx/5xx statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

// Recording is structurally unusable (too short, bad transition index).
class RecordingError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise corrupt numeric input.
class DataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Model used before it was fitted, or fitted on nothing.
class StateError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class IncompatibleVersionError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace etongue
