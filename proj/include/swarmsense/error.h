#pragma once

#include <stdexcept>
#include <string>

namespace swarmsense {

enum class ErrorCategory {
  Config,
  InvalidArgument,
  InvalidPose,
  Projection,
  Dimension,
  TableMiss,
  Constraint,
  Io,
  Replay,
};

const char* category_name(ErrorCategory category);

// Process exit code used by the CLI for each category (0 is success).
int exit_code(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(ErrorCategory::Config, key + ": " + message), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace swarmsense
