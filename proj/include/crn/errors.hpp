#pragma once

#include <stdexcept>
#include <string>

namespace crn {

// Base class for everything this library throws on its own behalf.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Operand extents do not line up (the message names both shapes).
struct DimensionError : Error {
    using Error::Error;
};

// A sequence operation received an empty sequence.
struct EmptyInputError : Error {
    using Error::Error;
};

// A softmax/attention call where every position is masked out.
struct EmptySupportError : Error {
    using Error::Error;
};

// Loss passed to backward is not a scalar.
struct RankError : Error {
    using Error::Error;
};

// Finite-difference probe hit a non-finite function value.
struct ProbeError : Error {
    using Error::Error;
};

// Malformed input; line-oriented formats carry the 1-based line number
// (0 when the source has no line structure).
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error(msg), line_number(0) {}
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number;
};

// Structurally valid record that violates the corpus schema.
struct SchemaError : Error {
    using Error::Error;
};

// Speaker partition does not cover the conversation.
struct PartitionError : Error {
    using Error::Error;
};

// Synthetic corpus request that cannot be satisfied.
struct GenerationError : Error {
    using Error::Error;
};

// Optimizer asked to step a parameter without a gradient.
struct OptimizerError : Error {
    using Error::Error;
};

// Checkpoint file is truncated, corrupt, or version-mismatched.
struct CheckpointError : Error {
    using Error::Error;
};

// Bad run configuration (missing keys, invalid values, empty splits).
struct ConfigError : Error {
    using Error::Error;
};

// Training diverged to a non-finite loss.
struct NonFiniteLossError : Error {
    using Error::Error;
};

// Categorical operation on a regression head or vice versa.
struct HeadError : Error {
    using Error::Error;
};

}  // namespace crn
