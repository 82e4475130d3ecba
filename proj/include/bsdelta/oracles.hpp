#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bsdelta/levy.hpp"
#include "bsdelta/solver.hpp"

namespace bsdelta {

/// Reference value with its provenance: closed form (std_error = 0) or
/// Monte Carlo with its sampling error.
struct OracleValue {
    double value = 0.0;
    double std_error = 0.0;
    std::string method = "closed_form";
    std::uint64_t n_samples = 0;

    bool operator==(const OracleValue&) const = default;
};

/// Payoff H(X_T) read off the terminal jump value.
struct TerminalFunctional {
    enum class Kind { identity, square, call, put, affine, custom };
    Kind kind = Kind::identity;
    double strike = 0.0;  // call / put
    double shift = 0.0;   // affine: x + shift
    std::function<double(double)> fn;  // always usable for sampling
    double lipschitz_K = 1.0;
    std::string name = "identity";
};

TerminalFunctional make_terminal_functional(const std::string& name,
                                            double strike, double shift);

/// True when E[H(X_T)] has a closed form under a compensated pure-jump law:
/// identity -> 0, affine -> shift, square -> T * Sigma^2.
bool has_closed_form(const TerminalFunctional& h);

/// E[H(X_T)] by closed form or by exact compound-Poisson simulation
/// (Poisson jump count, exact jump sizes, compensator drift).  Throws
/// NoSampler for Monte Carlo on models without a jump sampler and
/// ConfigError when a closed form is requested but not available.
OracleValue expectation_terminal(const LevyModel& model,
                                 const TerminalFunctional& h, double horizon,
                                 const std::string& method,
                                 std::uint64_t n_samples, std::uint64_t seed);

/// Value at time 0 of the linear system y' = -(a y + c) run backward from
/// E[F]: exp(a T) E[F] + (c / a)(exp(a T) - 1), with the a -> 0 limit
/// E[F] + c T.
double linear_driver_value(double a, double c, double terminal_mean,
                           double horizon);

/// Exhaustive tree evaluation of the same backward recursion, enumerating
/// every path without merging lattice states.  Bit-compatible with
/// backward_solve by construction (shared one-step arithmetic).  Guarded by
/// `max_leaves` on the path count and a hard cap of 4 steps.
double brute_force_tree(const WalkLaw& walk, const Driver& driver,
                        const TerminalCondition& terminal,
                        std::size_t max_leaves = 100000);

}  // namespace bsdelta
