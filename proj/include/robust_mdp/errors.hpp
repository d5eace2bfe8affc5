#pragma once

#include <stdexcept>
#include <string>

namespace robust_mdp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid sizes, ranges, or other caller-supplied parameters.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// NaN / inf inputs or results.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Model file could not be parsed or violates the model invariants.
class LoadError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration did not reach its tolerance within the iteration cap.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Operation is not defined for the given policy class.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Learned parameters blew up.
class InstabilityError : public Error {
public:
    using Error::Error;
};

} // namespace robust_mdp
