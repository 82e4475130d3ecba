#include <cmath>

#include "bsdelta/errors.hpp"
#include "bsdelta/quadrature.hpp"
#include "doctest.h"

using namespace bsdelta;

TEST_CASE("polynomials integrate exactly") {
    for (int k = 0; k <= 12; ++k) {
        const double got =
            integrate([k](double x) { return std::pow(x, k); }, 0.0, 1.0);
        CHECK(std::abs(got - 1.0 / (k + 1)) < 1e-13);
    }
}

TEST_CASE("smooth transcendental integrals hit tight tolerances") {
    QuadratureConfig cfg;
    cfg.tol = 1e-13;
    const double e1 = integrate([](double x) { return std::exp(x); }, 0.0, 1.0,
                                cfg);
    CHECK(std::abs(e1 - (std::exp(1.0) - 1.0)) < 1e-12);

    const double peak = integrate(
        [](double x) { return std::exp(-50.0 * x * x); }, -10.0, 10.0, cfg);
    CHECK(std::abs(peak - std::sqrt(M_PI / 50.0)) < 1e-12);

    const double osc =
        integrate([](double x) { return std::sin(10.0 * x); }, 0.0, M_PI, cfg);
    CHECK(std::abs(osc - (1.0 - std::cos(10.0 * M_PI)) / 10.0) < 1e-12);
}

TEST_CASE("kinks are handled by subdivision") {
    const double got = integrate(
        [](double x) { return std::abs(x - 1.0 / 3.0); }, 0.0, 1.0);
    const double exact = (1.0 / 9.0 + 4.0 / 9.0) / 2.0;
    CHECK(std::abs(got - exact) < 1e-10);
}

TEST_CASE("panel budget exhaustion throws") {
    QuadratureConfig cfg;
    cfg.tol = 1e-16;
    cfg.max_panels = 8;
    CHECK_THROWS_AS(integrate([](double x) { return std::abs(x - 1.0 / 3.0); },
                              0.0, 1.0, cfg),
                    QuadratureDivergence);
}

TEST_CASE("integration is deterministic") {
    const auto f = [](double x) { return std::cos(x) / (1.0 + x * x); };
    const double a = integrate(f, -3.0, 7.0);
    const double b = integrate(f, -3.0, 7.0);
    CHECK(a == b);
}

TEST_CASE("degenerate and reversed intervals") {
    const auto f = [](double x) { return x * x; };
    CHECK(integrate(f, 2.0, 2.0) == 0.0);
    CHECK(std::abs(integrate(f, 0.0, 1.0) + integrate(f, 1.0, 0.0)) < 1e-15);
}
