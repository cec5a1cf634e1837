#pragma once

#include <stdexcept>
#include <string>

namespace freeseg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear solve did not reach its residual bound.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class TopologyError : public Error {
public:
    using Error::Error;
};

/// Out-of-range parameters or violated operation preconditions.
class ParameterError : public Error {
public:
    using Error::Error;
};

}  // namespace freeseg
