#pragma once

#include <stdexcept>
#include <string>

namespace dpt {

// Every failure the library reports derives from Error so callers (the CLI in
// particular) can map the category onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bank/report file does not follow the expected layout or version.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Stored counts outside [0, N].
class CountError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpt
