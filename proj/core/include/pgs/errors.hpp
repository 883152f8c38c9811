#pragma once

#include <stdexcept>
#include <string>

namespace pgs {

// Malformed or truncated input file.
struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimensions of two inputs do not line up.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter is outside its documented range.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// NaN/Inf where finite values are required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pgs
