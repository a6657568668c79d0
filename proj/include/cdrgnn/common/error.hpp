#pragma once

#include <stdexcept>
#include <string>

namespace cdrgnn {

/// Raised when a caller-supplied configuration or argument violates a contract.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when input data cannot be used (bad header, degenerate statistics, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

}  // namespace cdrgnn
