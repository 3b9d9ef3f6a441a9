#pragma once

#include <stdexcept>
#include <string>

namespace projlearn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration, detected before any work starts.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (files, shapes, row counts).
class DataError : public Error {
public:
    using Error::Error;
};

/// Model file could not be decoded (truncated, corrupt, wrong version).
class ModelFormatError : public DataError {
public:
    using DataError::DataError;
};

/// Non-finite values, overflow, or a numerical routine that failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace projlearn
