#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedsd {

/// Invalid user-supplied configuration. `path` names the offending field
/// (e.g. "partition.alpha"), or is empty when no single field applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Malformed or mismatched input data (dimension, layout, file format).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// A generator could not produce samples for a class.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(int label, std::size_t attempts, const std::string& what)
      : std::runtime_error("class " + std::to_string(label) + ": " + what +
                           (attempts > 0 ? " after " + std::to_string(attempts) + " attempt(s)"
                                         : std::string{})),
        label_(label),
        attempts_(attempts) {}

  int label() const noexcept { return label_; }
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  int label_;
  std::size_t attempts_;
};

}  // namespace fedsd
