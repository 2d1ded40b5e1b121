#pragma once

#include <stdexcept>
#include <string>

namespace msar {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad call arguments (wrong sizes, out-of-range indices, mismatched data).
struct ArgumentError : Error {
    using Error::Error;
};

/// Mathematical domain violations (log of a nonpositive slope, bad rho range).
struct DomainError : Error {
    using Error::Error;
};

/// Non-unique answer, e.g. the stationary distribution of a reducible chain.
struct AmbiguityError : Error {
    using Error::Error;
};

/// Instance-size guards (brute-force enumeration too large).
struct GuardError : Error {
    using Error::Error;
};

/// Numerical failure (underflow in a filter step, non-finite difference).
struct NumericError : Error {
    using Error::Error;
};

/// Iterative scheme exceeded its budget; carries the last estimate.
struct ConvergenceError : Error {
    double last_estimate;
    ConvergenceError(const std::string& msg, double last)
        : Error(msg), last_estimate(last) {}
};

/// Optimizer could not improve on any start, or a regime degenerated.
struct OptimizationError : Error {
    using Error::Error;
};

/// Regimes with identical (slope, intercept, sigma) keys cannot be ordered.
struct TieError : DomainError {
    using DomainError::DomainError;
};

}  // namespace msar
