#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>

#include "bsdelta/quadrature.hpp"

namespace bsdelta {

/// Half-open interval (lo, hi]; +/-infinity allowed at the ends.  Integrals
/// against a density do not care about endpoint conventions, so this is only
/// documentation of intent.
struct Interval {
    double lo;
    double hi;
};

/// Description of a pure-jump Levy measure nu on the real line.  The driving
/// noise of every experiment is built from one of these plus an optional
/// independent Brownian part handled elsewhere.
///
/// Invariants: density(x) >= 0 for x != 0; the second moment integral
/// x^2 nu(dx) is finite and positive; `integration_bound` is large enough
/// that the mass beyond it is negligible at tolerance 1e-16.
struct LevyModel {
    std::string name;
    std::map<std::string, double> params;  // echoed into reports

    /// Levy density g with nu(dx) = g(x) dx, defined for x != 0.
    std::function<double(double)> density;

    bool finite_activity = true;
    /// Total mass nu(R); +infinity for infinite-activity models.
    double total_rate = 0.0;
    /// Closed-form second moment, when the model has one.
    std::optional<double> sigma2_closed;
    /// Blumenthal-Getoor index (upper bound); informational.
    double bg_index = 0.0;
    /// Small-jump moment bound epsilon; recorded for diagnostics only, the
    /// construction itself never consumes it.
    double moment_eps = 0.0;
    /// Radius R beyond which the tail is lumped into a single overflow bin.
    double truncation_radius = 0.0;
    /// Hard cutoff for numerical integration; tails beyond carry < 1e-16 of
    /// every moment of interest.
    double integration_bound = 0.0;
    bool symmetric = false;

    /// Draw one jump size (finite-activity models only); used by the exact
    /// compound-Poisson Monte Carlo oracle.
    std::optional<std::function<double(std::mt19937_64&)>> jump_sampler;
    /// First moment of nu (the compensator drift rate), 0 for symmetric laws.
    double mean_jump_rate = 0.0;

    /// Cached second moment Sigma^2 = integral x^2 nu(dx), validated against
    /// `sigma2_closed` at construction.
    double sigma2 = 0.0;
};

/// Jumps arrive at rate lambda with N(0, sigma^2) sizes.
LevyModel compound_poisson_normal(double lambda, double sigma);

/// Jumps arrive at rate lambda; sizes are exponential(eta1) with probability
/// p (up-moves) and -exponential(eta2) with probability 1-p.
LevyModel compound_poisson_double_exp(double lambda, double p, double eta1,
                                      double eta2);

/// Infinite-activity symmetric density C * exp(-M|x|) / |x|.
LevyModel variance_gamma_like(double C, double M);

/// Second moment of nu.  Uses the closed form when available, otherwise the
/// value computed by quadrature at construction; either way the result was
/// cross-checked at build time.  Throws DegenerateMeasure if it is not
/// positive beyond tolerance.
double second_moment(const LevyModel& model, const QuadratureConfig& cfg = {});

/// nu({|x| > radius}); radius must be positive for infinite-activity models.
double tail_mass(const LevyModel& model, double radius,
                 const QuadratureConfig& cfg = {});

/// integral of x nu(dx) over a finite union of intervals.
double partial_mean(const LevyModel& model, std::span<const Interval> set,
                    const QuadratureConfig& cfg = {});

/// nu((lo, hi]), integral of x, and integral of x^2 over a single interval.
/// Endpoints may be +/-infinity; intervals straddling 0 are split there so
/// integrable singularities at the origin stay off the quadrature nodes.
double measure_mass(const LevyModel& model, double lo, double hi,
                    const QuadratureConfig& cfg = {});
double measure_mean(const LevyModel& model, double lo, double hi,
                    const QuadratureConfig& cfg = {});
double measure_x2(const LevyModel& model, double lo, double hi,
                  const QuadratureConfig& cfg = {});

}  // namespace bsdelta
