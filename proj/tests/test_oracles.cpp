#include <cmath>

#include "bsdelta/errors.hpp"
#include "bsdelta/levy.hpp"
#include "bsdelta/oracles.hpp"
#include "bsdelta/walks.hpp"
#include "doctest.h"

using namespace bsdelta;

namespace {

WalkLaw small_walk(int steps, double horizon = 0.5) {
    WalkLaw walk;
    walk.grid = make_grid(horizon, steps);
    DiscretizeOptions opts;
    opts.bin_width_factor = 4.0;  // keep the tree arity small
    walk.x_law = make_increment_law(compound_poisson_normal(1.0, 1.0),
                                    walk.grid.delta(), opts)
                     .law;
    return walk;
}

}  // namespace

TEST_CASE("exhaustive tree agrees with the lattice solver") {
    const WalkLaw walk = small_walk(3);
    const Driver d = linear_y_driver(0.5, -0.1);
    const auto h = terminal_of_xt([](double x) { return std::tanh(x) + x; },
                                  "mixed");
    const double tree = brute_force_tree(walk, d, h, 2'000'000);
    const auto sol = backward_solve(walk, d, h);
    CHECK(std::abs(tree - sol.y0) < 1e-13);
}

TEST_CASE("tree size guards") {
    const WalkLaw walk = small_walk(3);
    CHECK_THROWS_AS(brute_force_tree(walk, zero_driver(),
                                     terminal_of_xt([](double x) { return x; },
                                                    "id"),
                                     5),
                    TreeTooLarge);
    const WalkLaw big = small_walk(5);
    CHECK_THROWS_AS(brute_force_tree(big, zero_driver(),
                                     terminal_of_xt([](double x) { return x; },
                                                    "id")),
                    TreeTooLarge);
}

TEST_CASE("terminal functional catalog") {
    const TerminalFunctional call = make_terminal_functional("call", 0.3, 0.0);
    CHECK(call.fn(1.0) == doctest::Approx(0.7));
    CHECK(call.fn(0.0) == 0.0);
    CHECK(call.lipschitz_K == 1.0);
    CHECK_FALSE(has_closed_form(call));

    const TerminalFunctional sq = make_terminal_functional("square", 0.0, 0.0);
    CHECK(sq.fn(3.0) == 9.0);
    CHECK(has_closed_form(sq));

    const TerminalFunctional aff = make_terminal_functional("affine", 0.0, 2.0);
    CHECK(aff.fn(1.5) == doctest::Approx(3.5));
    CHECK(has_closed_form(aff));

    CHECK_THROWS_AS(make_terminal_functional("nope", 0.0, 0.0), ConfigError);
}

TEST_CASE("closed form expectations") {
    const LevyModel m = compound_poisson_normal(1.0, 1.0);
    const auto id = make_terminal_functional("identity", 0.0, 0.0);
    const auto sq = make_terminal_functional("square", 0.0, 0.0);
    const auto aff = make_terminal_functional("affine", 0.0, 1.25);

    const OracleValue v_id = expectation_terminal(m, id, 2.0, "closed_form",
                                                  0, 1);
    CHECK(v_id.value == 0.0);
    CHECK(v_id.std_error == 0.0);
    CHECK(v_id.method == "closed_form");

    const OracleValue v_sq = expectation_terminal(m, sq, 2.0, "closed_form",
                                                  0, 1);
    CHECK(std::abs(v_sq.value - 2.0) < 1e-12);  // T Sigma^2

    const OracleValue v_af = expectation_terminal(m, aff, 2.0, "closed_form",
                                                  0, 1);
    CHECK(std::abs(v_af.value - 1.25) < 1e-15);

    const auto call = make_terminal_functional("call", 0.0, 0.0);
    CHECK_THROWS_AS(expectation_terminal(m, call, 2.0, "closed_form", 0, 1),
                    ConfigError);
}

TEST_CASE("monte carlo oracle is unbiased and reproducible") {
    const LevyModel m = compound_poisson_normal(1.0, 1.0);
    const auto sq = make_terminal_functional("square", 0.0, 0.0);
    const OracleValue a =
        expectation_terminal(m, sq, 1.0, "monte_carlo", 100000, 42);
    const OracleValue b =
        expectation_terminal(m, sq, 1.0, "monte_carlo", 100000, 42);
    CHECK(a.value == b.value);
    CHECK(a.n_samples == 100000);
    CHECK(a.method == "monte_carlo");
    CHECK(a.std_error > 0.0);
    CHECK(std::abs(a.value - 1.0) < 5.0 * a.std_error);

    const OracleValue c =
        expectation_terminal(m, sq, 1.0, "monte_carlo", 100000, 43);
    CHECK(a.value != c.value);

    const LevyModel vg = variance_gamma_like(1.0, 1.0);
    CHECK_THROWS_AS(expectation_terminal(vg, sq, 1.0, "monte_carlo", 1000, 1),
                    NoSampler);
}

TEST_CASE("linear backward value") {
    // a = 0 limit.
    CHECK(std::abs(linear_driver_value(0.0, 0.3, 2.0, 1.5) -
                   (2.0 + 0.3 * 1.5)) < 1e-15);
    // Generic value against the closed form.
    const double a = 0.5, c = 0.1, m = 2.0, t = 1.0;
    const double expect = std::exp(a * t) * m + c / a * (std::exp(a * t) - 1.0);
    CHECK(std::abs(linear_driver_value(a, c, m, t) - expect) < 1e-14);
    // Continuity across the a -> 0 switch.
    CHECK(std::abs(linear_driver_value(1e-13, 0.3, 2.0, 1.5) -
                   linear_driver_value(0.0, 0.3, 2.0, 1.5)) < 1e-11);
}

TEST_CASE("skewed model monte carlo drift compensation") {
    // The compensated walk must be centered: E X_T = 0 even when the jump
    // sizes have nonzero mean.
    const LevyModel m = compound_poisson_double_exp(1.0, 0.7, 2.0, 1.0);
    const auto id = make_terminal_functional("identity", 0.0, 0.0);
    const OracleValue v =
        expectation_terminal(m, id, 1.0, "monte_carlo", 200000, 7);
    CHECK(std::abs(v.value) < 5.0 * v.std_error + 1e-12);
}
