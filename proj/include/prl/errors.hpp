#pragma once

#include <stdexcept>
#include <string>

namespace prl {

/// Malformed or inconsistent input data (files, panels, dimensions).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine could not produce a valid result
/// (eigen-solver failure, non-PD matrix, solver non-convergence).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Contract violations on arguments (out-of-range tau, K, c, ...) are reported
// as std::invalid_argument.

}  // namespace prl
