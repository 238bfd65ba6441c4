#pragma once

#include <stdexcept>
#include <string>

namespace wesnet {

// Error taxonomy. Each family maps onto one CLI exit code (see exit_code()).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated a precondition (shape mismatch, missing field, bad index).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Input data outside the domain of an operation (non-finite entries etc).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Problem size exceeds what an exact method can enumerate.
class CapacityError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class SingularMatrixError : public NumericalError {
public:
    SingularMatrixError(const std::string& what, std::size_t dimension)
        : NumericalError(what), dimension_(dimension) {}
    std::size_t dimension() const noexcept { return dimension_; }

private:
    std::size_t dimension_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Checkpoint bytes failed validation (bad magic, truncation, checksum).
class CorruptionError : public IoError {
public:
    using IoError::IoError;
};

class VersionError : public IoError {
public:
    using IoError::IoError;
};

namespace exit_codes {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int numerical = 3;
inline constexpr int io = 4;
}  // namespace exit_codes

int exit_code(const Error& e) noexcept;

}  // namespace wesnet
