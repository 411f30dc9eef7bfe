#pragma once

#include <stdexcept>
#include <string>

namespace lanedef {

/// Invalid grid dimensions, rules or experiment settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An API was called outside its contract (stepping a finished game,
/// mismatched tensor shapes, empty inputs).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure during optimisation (non-finite loss or gradient).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lanedef
