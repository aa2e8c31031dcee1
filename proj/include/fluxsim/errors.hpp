// errors.hpp — exception hierarchy shared by all modules.

#pragma once

#include <stdexcept>
#include <string>

namespace fluxsim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration, file contents, or argument domain.
struct ConfigError : Error {
    using Error::Error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Basis-truncation (or other iterative) convergence failure.
struct ConvergenceError : Error {
    using Error::Error;
};

// Bracketing scan found no interior minimum.
struct NoMinimumError : Error {
    using Error::Error;
};

// A rate quadratic form evaluated negative (invalid model inputs).
struct NegativeRateError : Error {
    using Error::Error;
};

// Nonlinear fit failed to converge or left its validity range.
struct FitError : Error {
    using Error::Error;
};

struct SingularMatrixError : Error {
    using Error::Error;
};

// Spectrum has no usable peak above the DC bin.
struct DegenerateSignalError : Error {
    using Error::Error;
};

// A designed recursive filter section would be unstable.
struct InstabilityError : Error {
    using Error::Error;
};

// Malformed sampling grid (non-monotone axis, mismatched sizes).
struct GridError : Error {
    using Error::Error;
};

}  // namespace fluxsim
