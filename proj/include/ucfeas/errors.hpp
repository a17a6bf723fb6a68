#pragma once

#include <stdexcept>
#include <string>

namespace ucfeas {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

// Gram matrix (or other SPD candidate) lost positive definiteness during
// factorization.
struct RankDeficientError : Error {
    using Error::Error;
};

// Iterative kernel ran out of its iteration budget.
struct NoConvergenceError : Error {
    using Error::Error;
};

// Input exceeds the size cap of an exhaustive routine.
struct TooLargeError : Error {
    using Error::Error;
};

// Piece label inconsistent with the set it claims to describe.
struct LabelError : Error {
    using Error::Error;
};

// Point violates a set-membership precondition.
struct NotInSetError : Error {
    using Error::Error;
};

// Stepsize parameter outside its admissible interval.
struct StepsizeError : Error {
    using Error::Error;
};

// Extrapolation stepsize failed the descent condition it must certify.
struct StepsizeViolationError : Error {
    using Error::Error;
};

// Lyapunov value increased beyond tolerance during an iteration.
struct DivergentLyapunovError : Error {
    using Error::Error;
};

// Method preconditions not met by this problem instance.
struct NotApplicableError : Error {
    using Error::Error;
};

// Malformed text input; message carries the 1-based line number.
struct ParseError : Error {
    using Error::Error;
};

// Matrix difference too close to singular to invert.
struct SingularDifferenceError : Error {
    using Error::Error;
};

// Inconsistent or out-of-range run configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace ucfeas
