/// @file errors.hpp
/// @brief Exception hierarchy shared across the library.
///
/// Everything derives from DataError so the CLI can map any failure that
/// stems from inputs (files, geometry, degenerate statistics) to one exit
/// code. Usage errors (bad flags) are handled separately by the CLI parser.

#pragma once

#include <stdexcept>
#include <string>

namespace lamina {

/// Base class for all input/data-dependent failures.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : DataError {
    using DataError::DataError;
};

// .vgrid I/O
struct MalformedHeader : DataError {
    using DataError::DataError;
};
struct TruncatedData : DataError {
    using DataError::DataError;
};
struct UnsupportedDtype : DataError {
    using DataError::DataError;
};

// solvers
struct TooLarge : DataError {
    using DataError::DataError;
};
struct SingularSystem : DataError {
    using DataError::DataError;
};

// loss / metrics
struct EmptyDomain : DataError {
    using DataError::DataError;
};
struct EmptyMask : DataError {
    using DataError::DataError;
};
struct DegenerateInput : DataError {
    using DataError::DataError;
};
struct InvalidSegmentation : DataError {
    using DataError::DataError;
};
struct LandmarkOutsideMask : DataError {
    using DataError::DataError;
};
struct NonFiniteLoss : DataError {
    using DataError::DataError;
};

}  // namespace lamina
