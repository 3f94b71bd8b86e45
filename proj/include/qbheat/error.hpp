#pragma once

#include <stdexcept>
#include <string>

namespace qbheat {

// Two families: DataError for bad inputs (shapes, files, layouts, degenerate
// data) and NumericalError for failures of a numerical procedure on valid input.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ShapeError : public DataError {
public:
    using DataError::DataError;
};

class NonFiniteError : public DataError {
public:
    using DataError::DataError;
};

class LayoutError : public DataError {
public:
    using DataError::DataError;
};

class CollapseError : public DataError {
public:
    using DataError::DataError;
};

class DegenerateDataError : public DataError {
public:
    using DataError::DataError;
};

class ImageError : public DataError {
public:
    using DataError::DataError;
};

enum class FormatErrorKind { bad_magic, unsupported_version, truncated, dimension_overflow, invalid_header, io };

class FormatError : public DataError {
public:
    FormatError(FormatErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
    FormatErrorKind kind() const noexcept { return kind_; }

private:
    FormatErrorKind kind_;
};

class SingularMatrixError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OverflowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace qbheat
