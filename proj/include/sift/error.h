#pragma once

#include <stdexcept>
#include <string>

namespace sift {

/// Malformed input data, bad configuration or a violated precondition.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes handed to a numeric primitive.
class ShapeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A forward or backward computation produced NaN or infinity.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace sift
