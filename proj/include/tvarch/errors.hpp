#pragma once

#include <stdexcept>
#include <string>

namespace tvarch {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument value or violated precondition (r outside (0,1], h2 <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Incompatible combination of options (e.g. a GLS family without a known variance path).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Malformed or insufficient input data (CSV ingestion).
class DataError : public Error {
public:
    using Error::Error;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericError : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateWindowError : public NumericError {
public:
    using NumericError::NumericError;
};

class SelectionFailedError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateInputError : public NumericError {
public:
    using NumericError::NumericError;
};

class MatrixInversionError : public NumericError {
public:
    using NumericError::NumericError;
};

class CalibrationFailedError : public NumericError {
public:
    using NumericError::NumericError;
};

class SimulationDivergedError : public NumericError {
public:
    SimulationDivergedError(const std::string& what, long first_bad_index)
        : NumericError(what), first_bad_index_(first_bad_index) {}

    /// Time index (1-based; burn-in indices are <= 0) of the first non-finite value.
    [[nodiscard]] long first_bad_index() const noexcept { return first_bad_index_; }

private:
    long first_bad_index_;
};

}  // namespace tvarch
