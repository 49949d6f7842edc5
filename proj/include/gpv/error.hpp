#pragma once

#include <stdexcept>
#include <string>

namespace gpv {

// Every failure a caller can act on derives from Error; the CLI maps the
// class to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class RegimeViolation : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, int iterations, double residual)
        : Error(what + " (iterations=" + std::to_string(iterations) +
                ", residual=" + std::to_string(residual) + ")"),
          iterations(iterations), residual(residual) {}
    int iterations;
    double residual;
};

class NotConverged : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

class NonFiniteEnergy : public Error {
public:
    using Error::Error;
};

class EmptyRegion : public Error {
public:
    using Error::Error;
};

class EmptyAudit : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class WindingMismatch : public Error {
public:
    using Error::Error;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class InterpolationOutOfRange : public Error {
public:
    using Error::Error;
};

class DegenerateModulus : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class MissingInput : public IoError {
public:
    using IoError::IoError;
};

}  // namespace gpv
