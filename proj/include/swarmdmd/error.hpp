#pragma once

#include <stdexcept>
#include <string>

namespace swarmdmd {

// Precondition violated by the caller (bad shapes, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// File could not be read, written or parsed.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Numerically degenerate input (rank-deficient data, no signal).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An internal consistency check failed. Always a bug, never user error.
class InternalError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

} // namespace swarmdmd
