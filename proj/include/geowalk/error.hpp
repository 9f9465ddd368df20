#pragma once

#include <stdexcept>
#include <string>

namespace geowalk {

/// Invalid numeric or categorical parameter (nonpositive intensity, m = 0, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested index range leaves the region where results can be trusted.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Inputs are individually valid but inconsistent with each other.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Geometric construction impossible (e.g. affinely degenerate input).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver failed to reach its residual target.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace geowalk
