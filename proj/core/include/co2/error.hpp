#pragma once

#include <stdexcept>
#include <string>

namespace co2 {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file header or column set does not match the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A cell could not be parsed as a number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Data violates a dataset invariant (duplicate keys, out-of-range years, ...).
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// A column or series has zero variance where variation is required.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A linear system is singular or rank deficient.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Too few observations for the requested operation.
class LengthError : public Error {
public:
    using Error::Error;
};

/// Shapes of the operands do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid parameter value or configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An iterative method hit its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace co2
