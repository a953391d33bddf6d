#pragma once

#include <stdexcept>
#include <string>

namespace dynreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a type invariant (NaN coordinates, mismatched lengths, ...).
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// A component was asked to run with parameters it cannot honor.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Fewer than three usable pairs, or all pairs collinear.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

/// A pyramid level came out empty.
class PyramidTruncationError : public Error {
public:
    PyramidTruncationError(int level, const std::string& what)
        : Error(what), level_(level) {}
    int level() const { return level_; }

private:
    int level_;
};

/// Clustering produced nothing usable; the pipeline stops iterating.
class RefineFailure : public Error {
public:
    using Error::Error;
};

/// No usable transform could be estimated.
class RegistrationFailure : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A metric was evaluated on an input where it is undefined (e.g. an empty set).
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

/// File or config text that cannot be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace dynreg
