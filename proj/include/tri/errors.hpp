#pragma once

#include <stdexcept>
#include <string>

namespace tri {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file (ragged rows, unparseable cells).
struct ParseError : Error {
    using Error::Error;
};

/// Input violates a declared contract (empty dataset, non-binary value in a
/// binary-flagged column, duplicate column names).
struct ValidationError : Error {
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// Rank-deficient regression design.
struct SingularDesignError : Error {
    using Error::Error;
};

/// IRLS failed to converge (separation is the usual cause).
struct NonConvergenceError : Error {
    using Error::Error;
};

/// Estimating equation has no sign change on the search interval.
struct RootNotBracketedError : Error {
    using Error::Error;
};

/// Z-estimator information term is numerically zero.
struct DegenerateInformationError : Error {
    using Error::Error;
};

/// Naive triangulation retained no model.
struct NoValidModelError : Error {
    using Error::Error;
};

/// IV first stage is numerically zero.
struct WeakInstrumentError : Error {
    using Error::Error;
};

/// Conditioning event with zero probability in an exact summation.
struct DegenerateConditionalError : Error {
    using Error::Error;
};

/// Requested inference branch is incompatible with the available estimators.
struct BranchMismatchError : Error {
    using Error::Error;
};

/// Too many bootstrap replicates failed to estimate.
struct UnstableBootstrapError : Error {
    using Error::Error;
};

/// Too many simulation trials failed to estimate.
struct ExperimentUnstableError : Error {
    using Error::Error;
};

}  // namespace tri
