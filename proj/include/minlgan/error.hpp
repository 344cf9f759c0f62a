#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace minlgan {

// Root of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input file or config tree.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A class (normal or anomaly) needed by the operation has no samples.
class EmptyClassError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A loss or gradient went non-finite. Carries the step index where it happened.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace minlgan
