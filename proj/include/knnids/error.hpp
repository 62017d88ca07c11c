#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace knnids {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data. The CLI maps these to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Threshold calibration could not produce a usable root. Exit code 3.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Malformed declarative configuration (scenario or bench documents).
class ConfigError : public Error {
public:
    using Error::Error;
};

class DegenerateDimension : public DataError {
public:
    explicit DegenerateDimension(std::size_t dim)
        : DataError("dimension " + std::to_string(dim) + " has min == max over the training set"),
          dim_(dim) {}
    std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_;
};

class InsufficientData : public DataError {
public:
    using DataError::DataError;
};

class NotEnoughReferencePoints : public DataError {
public:
    using DataError::DataError;
};

class DimensionMismatch : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class VersionMismatch : public DataError {
public:
    using DataError::DataError;
};

class CorruptModel : public DataError {
public:
    using DataError::DataError;
};

class EmptyWindow : public DataError {
public:
    using DataError::DataError;
};

class InvalidSpec : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class OutOfDomain : public CalibrationError {
public:
    using CalibrationError::CalibrationError;
};

class NoPositiveRoot : public CalibrationError {
public:
    using CalibrationError::CalibrationError;
};

class DegenerateTrivialOnly : public CalibrationError {
public:
    using CalibrationError::CalibrationError;
};

}  // namespace knnids
