#pragma once

#include <stdexcept>
#include <string>

namespace censoring {

/// Tensor dimensions that do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid or inconsistent configuration (bad mode/method pairing, odd latent size, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed on-disk data (epoch files, checkpoints, CSV).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf encountered where a finite value is required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace censoring
