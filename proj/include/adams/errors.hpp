#pragma once

#include <stdexcept>
#include <string>

namespace adams {

// Bad user-supplied configuration (counts, ranges, flag combinations).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// File exists but its contents are not a valid serialized artifact
// (bad magic, truncation, unsupported version).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training aborted because the loss or a gradient became non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace adams
