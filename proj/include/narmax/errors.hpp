#pragma once

#include <stdexcept>
#include <string>

namespace narmax {

/// Precondition or invariant breach in caller-supplied arguments.
struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A belief update produced parameters outside the valid family
/// (e.g. a Gamma shape that is no longer positive).
struct DegenerateBelief : std::domain_error {
    using std::domain_error::domain_error;
};

/// A symmetric positive-definite factorization failed or the matrix is
/// too ill-conditioned to invert reliably.
struct NumericalConditioning : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A signal value entering the pipeline is NaN or infinite, which signals
/// a diverged upstream simulation or estimator.
struct NonFiniteSignal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace narmax
