#pragma once

#include <stdexcept>
#include <string>

namespace saecrypt {

// Base for all library failures. The CLI maps the concrete kind to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad caller input: shape mismatch, out-of-range parameter, broken invariant.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Unreadable, truncated or malformed file / container.
class FormatError : public Error {
public:
    using Error::Error;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

// Numerical breakdown: degenerate chaotic key, zero variance, divergence.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace saecrypt
