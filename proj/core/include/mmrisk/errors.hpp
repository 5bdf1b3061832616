#pragma once

#include <stdexcept>
#include <string>

namespace mmrisk {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Structurally malformed input: bad JSON shape, unknown keys, non-finite
// numbers, locally inconsistent values (e.g. mixture weights that do not
// sum to one). Reported with the offending field path where possible.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Model-level validation failure: reducible chain, a matrix that is not a
// generator, a precondition such as negative drift that the requested
// computation needs.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Numerical failure inside an analytic pipeline: singular linear system,
// repeated polynomial root, transform argument outside its domain,
// internally inconsistent intermediate result.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace mmrisk
