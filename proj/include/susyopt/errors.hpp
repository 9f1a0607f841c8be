#pragma once

#include <stdexcept>
#include <string>

namespace susyopt {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied parameters (bad grid, unknown config key, passivity violation).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's precondition (grid/representation mismatch, etc).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A sampled function was not finite at some grid point.
class SamplingError : public Error {
public:
    using Error::Error;
};

/// Zero-norm state where a normalizable one is required.
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

/// LAPACK failure, eigensolver residual too large, and similar.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace susyopt
