#pragma once

#include <stdexcept>
#include <string>

namespace freepca {

// Error taxonomy shared by all modules. The CLI maps each type to a distinct
// exit code, so throw the most specific one that applies.

// Tensor/matrix dimension mismatch between arguments.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the mathematically valid range (k > f, step past the
// schedule end, window larger than the sequence, ...).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite data where finite values are required.
struct ValueError : std::runtime_error {
    explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed .ften input; the message carries the byte offset of the defect.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Component bookkeeping violated: overlapping or missing component indices,
// projections taken against different bases.
struct ConsistencyError : std::runtime_error {
    explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Window plan that cannot cover the sequence or does not match its tensor.
struct PlanError : std::runtime_error {
    explicit PlanError(const std::string& msg) : std::runtime_error(msg) {}
};

// Run configuration rejected before any compute starts.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure (open/read/write).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace freepca
