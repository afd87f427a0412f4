#pragma once

#include <stdexcept>
#include <string>

namespace smj {

// Bad configuration or dataset input. CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A caller violated an operation's precondition (empty text, bad index, ...).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An oracle answered but the answer is unusable for this item.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The oracle could not be reached at all. Aborts a run; CLI exit code 2.
class BackendUnavailable : public OracleError {
 public:
  using OracleError::OracleError;
};

}  // namespace smj
