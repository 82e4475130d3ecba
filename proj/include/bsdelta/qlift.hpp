#pragma once

#include <span>

#include "bsdelta/discretize.hpp"
#include "bsdelta/driver.hpp"

namespace bsdelta {

/// Piecewise lift of a jump-coefficient table from the walk support back to
/// the whole real line: constant on each bin at the bin's table value,
/// linear through the origin on the central band with slope matched to the
/// +-h values, and 0 at x = 0.  `ztable` is aligned with `law.support`.
double q_eval(const IncrementLaw& law, const BinLayout& layout,
              std::span<const double> ztable, double x);

/// Integral of (Q z1 - Q z0)^2 against the jump measure, by direct
/// quadrature over the central band, every bin, and the overflow tails.
double i_q(const LevyModel& model, const IncrementLaw& law,
           const BinLayout& layout, std::span<const double> z1,
           std::span<const double> z0, const QuadratureConfig& cfg = {});

/// Squared norm of a table under the scaled walk law nu_pi = law / delta,
/// i.e. sum over non-zero atoms of z^2 * p / delta.
double pi_norm2(const IncrementLaw& law, std::span<const double> ztable);

/// Continuous-driver description that the lift turns into a discrete Driver.
///
/// f(t, y, z, zt) = c + a * y + b * z + integral of rho(x) * zt(x) * x nu(dx)
///
/// The jump integral is K-Lipschitz in zt under L2(nu) with constant
/// sqrt(integral of rho^2 x^2 nu), computed at lift time.
struct DriverSpec {
    enum class Kind { zero, constant, linear_y, jump_integral } kind =
        Kind::zero;
    double a = 0.0;  // y coefficient
    double b = 0.0;  // z coefficient (mixed mode)
    double c = 0.0;  // constant term
    std::function<double(double)> rho;  // jump-integral weight
};

/// Replaces the jump argument by its lifted table: the integral term becomes
/// a fixed linear functional of `ztable` with weights integrated bin by bin.
/// The returned driver's Lipschitz constant is the continuous one (the lift
/// is non-expanding whenever layout.lift_bound() holds).
Driver lift_driver(const DriverSpec& spec, const LevyModel& model,
                   const IncrementLaw& law, const BinLayout& layout,
                   const QuadratureConfig& cfg = {});

}  // namespace bsdelta
