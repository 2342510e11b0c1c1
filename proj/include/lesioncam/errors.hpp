#pragma once

#include <stdexcept>
#include <string>

namespace lesioncam {

// Shape/dimension mismatches between tensors, images, masks.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller misuse: out-of-range class index, invalid parameter, missing context.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or unsupported files: bad magic, truncation, malformed CSV rows.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Data-level validation failures (e.g. contradictory labels, empty classes).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Undefined metrics, degenerate numeric inputs.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace lesioncam
