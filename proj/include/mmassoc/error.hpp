#pragma once

#include <stdexcept>
#include <string>

namespace mmassoc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometric precondition violated (degenerate polygon, bad beam region, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A point fell outside the world or the context grid.
class OutOfBoundsError : public Error {
 public:
  using Error::Error;
};

/// Caller broke an operation's contract (e.g. empty competitive set).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Exhaustive search refused because the instance is too large.
class InfeasibleScaleError : public Error {
 public:
  using Error::Error;
};

/// Configuration rejected. `key()` names the offending JSON path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmassoc
