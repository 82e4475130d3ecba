#pragma once

#include <stdexcept>
#include <string>

namespace bsdelta {

/// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Adaptive quadrature failed to reach the requested absolute tolerance
/// within the panel budget.
struct QuadratureDivergence : Error {
    using Error::Error;
};

/// A Levy model with (numerically) zero second moment, or an otherwise
/// unusable jump measure.
struct DegenerateMeasure : Error {
    using Error::Error;
};

/// The signed tail mean never crosses zero, so no balance threshold exists.
struct NoBalancePoint : Error {
    using Error::Error;
};

/// Bisection failed to bracket/shrink to tolerance within the iteration cap.
struct BisectionStall : Error {
    using Error::Error;
};

/// A spatial bin received no mass from the jump measure.
struct EmptyBin : Error {
    using Error::Error;
};

/// The step size is too coarse: the no-jump probability dropped to 1/3 or
/// below, violating the scheme's standing assumption.
struct ZeroJumpViolated : Error {
    using Error::Error;
};

/// Within-bin variance came out negative beyond rounding (impossible for a
/// genuine measure; indicates broken quadrature or model).
struct NegativeVariance : Error {
    using Error::Error;
};

/// Moment-matched probability re-solve left the simplex.
struct InfeasibleRebalance : Error {
    using Error::Error;
};

/// A jump-function table does not line up with the increment-law support.
struct SupportMismatch : Error {
    using Error::Error;
};

/// K * delta >= 1: the implicit one-step map is not a contraction.
struct ContractionViolation : Error {
    using Error::Error;
};

/// The implicit one-step fixed point failed to settle within the iteration cap.
struct FixedPointStall : Error {
    using Error::Error;
};

/// Reachable lattice grew past the configured node cap.
struct StateExplosion : Error {
    using Error::Error;
};

/// Picard iteration did not contract within the iteration budget.
struct NonConvergence : Error {
    using Error::Error;
};

/// Exhaustive tree evaluation would exceed the size guard.
struct TreeTooLarge : Error {
    using Error::Error;
};

/// Monte Carlo oracle requested for a model without an exact path sampler.
struct NoSampler : Error {
    using Error::Error;
};

/// Malformed experiment configuration (unknown key, bad value, missing
/// section, inconsistent grid).
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace bsdelta
