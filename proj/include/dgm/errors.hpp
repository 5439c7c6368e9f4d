#pragma once

#include <stdexcept>
#include <string>

namespace dgm {

// Shape/dimension mismatches between tensors.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Out-of-range row/element indices.
struct IndexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid numeric domain (e.g. log of a non-positive value).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent model or run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files or datasets.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered during optimization.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dgm
