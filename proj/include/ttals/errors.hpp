#pragma once

#include <stdexcept>
#include <string>

namespace ttals {

/// Index or mode outside the valid range.
struct BoundsError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Mathematically invalid input: zero norm, zero sampling mass, size mismatch.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Operation called on an object in the wrong state (e.g. wrong orthogonality center).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed or inconsistent input data (files, coordinates).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace ttals
