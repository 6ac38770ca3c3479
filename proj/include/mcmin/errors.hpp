#pragma once

#include <stdexcept>
#include <string>

namespace mcmin {

/// Base class for all library errors.
struct McError : std::runtime_error {
    explicit McError(const std::string& what) : std::runtime_error(what) {}
};

struct RowSumError : McError {
    using McError::McError;
};
struct NegativeWeight : McError {
    using McError::McError;
};
struct BadInitial : McError {
    using McError::McError;
};
struct NotABisimulation : McError {
    using McError::McError;
};
struct BadDiscount : McError {
    using McError::McError;
};
struct BadProbability : McError {
    using McError::McError;
};

/// Text or JSON input could not be parsed; carries 1-based position.
struct ParseError : McError {
    int line;
    int column;
    ParseError(int line_, int column_, const std::string& what)
        : McError("parse error at " + std::to_string(line_) + ":" + std::to_string(column_) +
                  ": " + what),
          line(line_),
          column(column_) {}
};

struct DimensionMismatch : McError {
    using McError::McError;
};
struct MarginalViolation : McError {
    using McError::McError;
};
struct SingularSystem : McError {
    using McError::McError;
};
struct NonTermination : McError {
    using McError::McError;
};
struct DivergentCounts : McError {
    using McError::McError;
};
struct UselessInitialApproximant : McError {
    using McError::McError;
};
struct TooFewEdges : McError {
    using McError::McError;
};
struct NotACover : McError {
    using McError::McError;
};
struct InvalidWitness : McError {
    using McError::McError;
};
struct StateBudgetExceeded : McError {
    using McError::McError;
};
struct UnsupportedFormat : McError {
    using McError::McError;
};
struct InvalidTemplate : McError {
    using McError::McError;
};
struct ResourceTimeout : McError {
    using McError::McError;
};

}  // namespace mcmin
