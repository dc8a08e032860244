#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sct {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scenario or network description could not be resolved. `path` names the
/// offending entry, e.g. "/network/kernels/0/1/name".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A computation produced a value it cannot continue from (non-finite
/// distance, failed Newton solve, ...).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
  NumericalError(const std::string& what, std::size_t step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_ = 0;
};

}  // namespace sct
