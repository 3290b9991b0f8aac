// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace stylebal {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes or lengths disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A mathematical precondition does not hold (e.g. non-negativity).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Architecture, tap or option inconsistency.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent file contents.
class DataError : public Error {
public:
    using Error::Error;
};

/// Bad invocation (empty inputs, missing arguments).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Correlation is undefined (constant input or too few samples).
class CorrelationError : public Error {
public:
    using Error::Error;
};

}  // namespace stylebal
