#pragma once

#include <stdexcept>
#include <string>

namespace smartmc {

// Data/format problems: bad files, mismatched shapes, invalid arguments.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical problems: non-finite objectives, zero probabilities, overflow.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NormViolation : NumericError {
    int block;
    double norm;
    NormViolation(int block_, double norm_)
        : NumericError("block " + std::to_string(block_) + " has l2 norm " +
                       std::to_string(norm_) + ", expected 1"),
          block(block_), norm(norm_) {}
};

struct ShapeMismatch : DataError {
    using DataError::DataError;
};

struct ZeroVector : NumericError {
    using NumericError::NumericError;
};

struct ObjectiveNonFinite : NumericError {
    using NumericError::NumericError;
};

struct NotConverged : DataError {
    using DataError::DataError;
};

struct TolTooSmall : DataError {
    using DataError::DataError;
};

struct OverflowGuard : NumericError {
    using NumericError::NumericError;
};

struct ZeroProbability : NumericError {
    using NumericError::NumericError;
};

struct ZeroSelfTransition : NumericError {
    using NumericError::NumericError;
};

struct MissingCoefficient : DataError {
    using DataError::DataError;
};

struct EmptyLog : DataError {
    using DataError::DataError;
};

struct DegenerateColumn : DataError {
    using DataError::DataError;
};

struct ParseError : DataError {
    int line;
    ParseError(const std::string& msg, int line_)
        : DataError(msg + " (line " + std::to_string(line_) + ")"), line(line_) {}
};

struct SchemaMismatch : DataError {
    using DataError::DataError;
};

} // namespace smartmc
