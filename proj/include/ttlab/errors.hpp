#pragma once

#include <stdexcept>
#include <string>

namespace ttlab {

// All library failures derive from Error so callers can map them onto exit
// codes without catching std::exception wholesale.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown (singular matrix, non-finite value).
class NumericError : public Error {
public:
    using Error::Error;
};

class InvalidDiffeoError : public Error {
public:
    using Error::Error;
};

/// A geodesic exceeded the arclength cap without reaching the boundary.
class TrappedGeodesicError : public NumericError {
public:
    using NumericError::NumericError;
};

class ShootingFailureError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Sampled data on incompatible grids.
class ShapeError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// A broken scattering table lacks an entry an operation needs.
class IncompleteTableError : public Error {
public:
    using Error::Error;
};

class AmbiguousScatteringError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ttlab
