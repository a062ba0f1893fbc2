#pragma once

#include <stdexcept>
#include <string>

namespace locc {

/// Shape or size of an argument does not match what the operation needs.
struct DimensionError : std::invalid_argument {
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A stated precondition does not hold for the given inputs.
struct PreconditionError : std::invalid_argument {
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// The constructed measurement operator has operator norm > 1; a transform
/// may still exist for other parameter choices.
struct NotAContraction : std::runtime_error {
    explicit NotAContraction(const std::string& what) : std::runtime_error(what) {}
};

/// Requested success probability exceeds the maximum achievable one.
struct InfeasibleTarget : std::runtime_error {
    explicit InfeasibleTarget(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative decomposition did not converge within its sweep cap.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace locc
