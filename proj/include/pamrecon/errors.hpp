#pragma once

#include <stdexcept>
#include <string>

namespace pam {

/// Bad argument values: empty images, mismatched dimensions, out-of-range options.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tensor shapes that do not fit the layer or model they are fed to.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent model, training or run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed files (images, checkpoints, manifests).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace pam
