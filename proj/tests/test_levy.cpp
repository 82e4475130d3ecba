#include <cmath>

#include "bsdelta/errors.hpp"
#include "bsdelta/levy.hpp"
#include "doctest.h"

using namespace bsdelta;

namespace {

// E1(1) by the alternating series E1(x) = -gamma - ln x + sum (-1)^{k+1}
// x^k / (k k!); at x = 1 twenty terms are far below double rounding.
double exp_integral_at_one() {
    constexpr double kEulerGamma = 0.57721566490153286;
    double sum = 0.0;
    double term = 1.0;  // x^k / k! at k = 0
    for (int k = 1; k <= 25; ++k) {
        term /= k;  // now x^k / k!
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term / k;
    }
    return -kEulerGamma + sum;
}

}  // namespace

TEST_CASE("normal compound Poisson moments") {
    const LevyModel m = compound_poisson_normal(1.0, 1.0);
    CHECK(m.finite_activity);
    CHECK(m.symmetric);
    CHECK(std::abs(m.total_rate - 1.0) < 1e-15);
    CHECK(std::abs(second_moment(m) - 1.0) < 1e-12);
    CHECK(std::abs(m.mean_jump_rate) < 1e-12);

    // nu(|x| > 1) = lambda P(|Z| > 1) = erfc(1 / sqrt 2).
    const double p_out = std::erfc(1.0 / std::sqrt(2.0));
    CHECK(std::abs(tail_mass(m, 1.0) - p_out) < 1e-10);

    // integral of x nu over (0, inf) = lambda sigma / sqrt(2 pi).
    const Interval pos[] = {{0.0, m.integration_bound}};
    CHECK(std::abs(partial_mean(m, pos) - 1.0 / std::sqrt(2.0 * M_PI)) <
          1e-10);

    CHECK(m.jump_sampler.has_value());
    CHECK(m.truncation_radius > 0.0);
    CHECK(m.integration_bound >= m.truncation_radius);
}

TEST_CASE("double exponential compound Poisson moments") {
    const LevyModel m = compound_poisson_double_exp(1.0, 0.7, 2.0, 1.0);
    CHECK(m.finite_activity);
    CHECK_FALSE(m.symmetric);
    // lambda (p 2/eta1^2 + (1-p) 2/eta2^2) = 0.7 * 0.5 + 0.3 * 2 = 0.95.
    CHECK(std::abs(second_moment(m) - 0.95) < 1e-12);
    // lambda (p/eta1 - (1-p)/eta2) = 0.35 - 0.30 = 0.05.
    CHECK(std::abs(m.mean_jump_rate - 0.05) < 1e-10);
    // nu(|x| > r) = p e^{-eta1 r} + (1-p) e^{-eta2 r}.
    const double expect =
        0.7 * std::exp(-2.0 * 0.5) + 0.3 * std::exp(-1.0 * 0.5);
    CHECK(std::abs(tail_mass(m, 0.5) - expect) < 1e-10);
    CHECK(m.jump_sampler.has_value());
}

TEST_CASE("variance gamma like moments") {
    const LevyModel m = variance_gamma_like(1.0, 1.0);
    CHECK_FALSE(m.finite_activity);
    CHECK(m.symmetric);
    CHECK(std::isinf(m.total_rate));
    // 2 C integral_0^inf x e^{-Mx} dx = 2 / M^2 = 2.
    CHECK(std::abs(second_moment(m) - 2.0) < 1e-11);
    // nu(|x| > 1) = 2 C E1(M) = 2 E1(1); series cross-check in this file.
    const double e1 = exp_integral_at_one();
    CHECK(std::abs(e1 - 0.21938393439552029) < 1e-15);
    CHECK(std::abs(tail_mass(m, 1.0) - 2.0 * e1) < 1e-10);
    // integral of x nu over (0, inf) = C / M = 1.
    const Interval pos[] = {{0.0, m.integration_bound}};
    CHECK(std::abs(partial_mean(m, pos) - 1.0) < 1e-9);
    CHECK_FALSE(m.jump_sampler.has_value());
}

TEST_CASE("interval helpers agree with each other") {
    const LevyModel m = compound_poisson_normal(2.0, 0.5);
    const double lo = 0.3, hi = 1.4;
    const double mass = measure_mass(m, lo, hi);
    const double mean = measure_mean(m, lo, hi);
    const double x2 = measure_x2(m, lo, hi);
    CHECK(mass > 0.0);
    // On (0.3, 1.4) every x lies between the endpoints, so the mean does too.
    CHECK(mean >= lo * mass);
    CHECK(mean <= hi * mass);
    CHECK(x2 >= lo * lo * mass);
    CHECK(x2 <= hi * hi * mass);
    // Splitting at an interior point is additive.
    const double mid = 0.9;
    CHECK(std::abs(measure_mass(m, lo, mid) + measure_mass(m, mid, hi) - mass) <
          1e-12);
}

TEST_CASE("straddling zero stays finite for the singular density") {
    const LevyModel m = variance_gamma_like(1.0, 2.0);
    // x and x^2 are integrable across the singularity at 0.
    const double mean = measure_mean(m, -1.0, 1.0);
    CHECK(std::abs(mean) < 1e-9);  // symmetric
    const double x2 = measure_x2(m, -1.0, 1.0);
    CHECK(x2 > 0.0);
    CHECK(x2 < second_moment(m));
}
