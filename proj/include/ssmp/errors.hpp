#pragma once

#include <stdexcept>

namespace ssmp {

/// Invalid model input. The message names the offending index.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A simulation could not deliver its contract (budget exhausted, step underflow, ...).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssmp
