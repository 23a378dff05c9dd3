#pragma once

#include <stdexcept>
#include <string>

namespace perfalign {

// Base of every error raised by the library. The CLI maps each subclass to an
// exit code (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not agree (column counts, inner dimensions, block sizes).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters: k out of range, bad bounds, odd sample counts, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data: non-finite entries, malformed files, zero-norm columns.
class DataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: singular matrices, divergence, non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Training diverged; carries the epoch at which the loss became non-finite.
class TrainingError : public NumericalError {
 public:
  TrainingError(const std::string& what, int epoch)
      : NumericalError(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace perfalign
