#pragma once

#include <stdexcept>
#include <string>

namespace phaselab {

/// Invalid parameters, malformed input files, unknown keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that has no defined result for the data it was given
/// (empty valid-estimate set, vanishing resultant vector, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phaselab
