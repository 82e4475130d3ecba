#include <cmath>
#include <functional>
#include <vector>

#include "bsdelta/errors.hpp"
#include "bsdelta/harness.hpp"
#include "bsdelta/levy.hpp"
#include "bsdelta/solver.hpp"
#include "doctest.h"

using namespace bsdelta;

namespace {

WalkLaw pure_jump_walk(double horizon, int steps,
                       std::vector<double> monitoring = {}) {
    WalkLaw walk;
    walk.grid = make_grid(horizon, steps, std::move(monitoring));
    walk.x_law = make_increment_law(compound_poisson_normal(1.0, 1.0),
                                    walk.grid.delta())
                     .law;
    return walk;
}

}  // namespace

TEST_CASE("zero driver reproduces the lattice expectation") {
    const WalkLaw walk = pure_jump_walk(1.0, 6);
    const auto sol = backward_solve(
        walk, zero_driver(),
        terminal_of_xt([](double x) { return x * x; }, "square"));
    const auto probs = node_probabilities(sol);
    double expect = 0.0;
    const Slice& last = sol.slices.back();
    for (std::size_t v = 0; v < last.keys.size(); ++v) {
        const double x = static_cast<double>(last.keys[v].x) * walk.x_law.unit;
        expect += probs.back()[v] * x * x;
    }
    CHECK(std::abs(sol.y0 - expect) < 1e-12);
    // E X_T^2 = T Sigma^2 with the exact-variance law.
    CHECK(std::abs(sol.y0 - 1.0) < 1e-10);
}

TEST_CASE("terminal shifts pass through additively") {
    const WalkLaw walk = pure_jump_walk(1.0, 5);
    const Driver d = constant_driver(0.3);
    const auto h0 = [](double x) { return std::tanh(x); };
    const auto h1 = [](double x) { return std::tanh(x) + 2.5; };
    const auto s0 = backward_solve(walk, d, terminal_of_xt(h0, "base"));
    const auto s1 = backward_solve(walk, d, terminal_of_xt(h1, "shifted"));
    CHECK(std::abs((s1.y0 - s0.y0) - 2.5) < 1e-12);
}

TEST_CASE("implicit linear recursion matches the hand-rolled formula") {
    const WalkLaw walk = pure_jump_walk(1.0, 8);
    const double a = 0.6, c = 0.2, terminal = 1.7;
    const auto sol = backward_solve(
        walk, linear_y_driver(a, c),
        terminal_of_xt([terminal](double) { return terminal; }, "const"));
    // Deterministic terminal: Y_i = (Y_{i+1} + c delta) / (1 - a delta).
    const double delta = walk.grid.delta();
    double y = terminal;
    for (int i = 0; i < 8; ++i) y = (y + c * delta) / (1.0 - a * delta);
    CHECK(std::abs(sol.y0 - y) < 1e-12);
    CHECK(sol.max_fp_residual < 1e-11);
}

TEST_CASE("pure jump solutions have a vanishing orthogonal residual") {
    const WalkLaw walk = pure_jump_walk(1.0, 6);
    const auto sol = backward_solve(
        walk, linear_y_driver(0.3, 0.1),
        terminal_of_xt([](double x) { return std::tanh(x); }, "tanh"));
    const MartingaleDiagnostics diag = compute_m_increments(sol);
    CHECK(diag.max_abs_dm < 1e-12);
    CHECK(diag.max_mean < 1e-12);
    CHECK(orthogonality_check(sol) < 1e-12);
}

TEST_CASE("mixed mode keeps the increments orthogonal") {
    WalkLaw walk = pure_jump_walk(0.5, 4);
    walk.w_law = brownian_increment_law(walk.grid.delta(),
                                        BrownianVariant::trinomial);
    const auto sol = backward_solve(
        walk, linear_y_driver(0.2, 0.0),
        terminal_of_xt([](double x) { return std::sin(x); }, "sin"));
    const MartingaleDiagnostics diag = compute_m_increments(sol);
    CHECK(diag.max_mean < 1e-12);
    CHECK(diag.max_w_orth < 1e-12);
    CHECK(diag.max_jump_orth < 1e-12);

    // A terminal charging (dW)^2 forces a genuine residual martingale.
    TerminalCondition wsq;
    wsq.eval = [](std::span<const double>, double w) { return w * w; };
    wsq.uses_terminal_w = true;
    wsq.lipschitz_K = 0.0;
    wsq.name = "w_squared";
    const auto s2 = backward_solve(walk, zero_driver(), wsq);
    const MartingaleDiagnostics d2 = compute_m_increments(s2);
    CHECK(d2.max_abs_dm > walk.grid.delta() / 2.0 - 1e-12);
    CHECK(d2.max_mean < 1e-12);
    CHECK(orthogonality_check(s2) < 1e-12);
}

TEST_CASE("decompositions reconstruct the conditional mean and children") {
    const WalkLaw walk = pure_jump_walk(1.0, 4);
    const auto sol = backward_solve(
        walk, linear_y_driver(0.4, -0.2),
        terminal_of_xt([](double x) { return std::cos(x); }, "cos"));
    const auto children = child_table(sol);
    const detail::StepLaw sl = detail::make_step_law(walk);
    const std::size_t nx = sl.xp.size();
    double worst = 0.0;
    visit_decompositions(sol, [&](int j, std::size_t v,
                                  const NodeDecomposition& d) {
        double ey = 0.0;
        for (std::size_t xi = 0; xi < nx; ++xi)
            ey += sl.xp[xi] * sol.slices[j + 1].y[children[j][v * nx + xi]];
        worst = std::max(worst, std::abs(ey - d.ey));
        // The one-step relation: y = ey + delta * f(t, y, z, zt).
        const double f = 0.4 * sol.slices[j].y[v] - 0.2;
        worst = std::max(worst, std::abs(sol.slices[j].y[v] -
                                         (ey + sl.delta * f)));
        // zt vanishes at the zero atom by construction.
        worst = std::max(worst, std::abs(d.zt[sl.x_zero]));
    });
    CHECK(worst < 1e-12);

    // Spot check one node against the one-shot helper.
    const NodeDecomposition one = decompose_node(sol, 1, 0);
    bool seen = false;
    visit_decompositions(sol, [&](int j, std::size_t v,
                                  const NodeDecomposition& d) {
        if (j == 1 && v == 0) {
            seen = true;
            CHECK(d.ey == one.ey);
            CHECK(d.zt == one.zt);
            CHECK(d.dm == one.dm);
        }
    });
    CHECK(seen);
}

TEST_CASE("node probabilities are a probability vector per slice") {
    const WalkLaw walk = pure_jump_walk(1.0, 5);
    const auto sol = backward_solve(
        walk, zero_driver(),
        terminal_of_xt([](double x) { return x; }, "identity"));
    const auto probs = node_probabilities(sol);
    REQUIRE(probs.size() == sol.slices.size());
    for (std::size_t j = 0; j < probs.size(); ++j) {
        double total = 0.0;
        for (const double p : probs[j]) {
            CHECK(p >= 0.0);
            total += p;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("running maximum expectation agrees with path enumeration") {
    const WalkLaw walk = pure_jump_walk(0.6, 3);
    const auto sol = backward_solve(
        walk, linear_y_driver(0.3, 0.0),
        terminal_of_xt([](double x) { return std::tanh(2.0 * x); }, "t2"));
    std::vector<std::vector<double>> values(sol.slices.size());
    for (std::size_t j = 0; j < sol.slices.size(); ++j)
        values[j] = sol.slices[j].y;

    // Enumerate every path through the child table.
    const auto children = child_table(sol);
    const detail::StepLaw sl = detail::make_step_law(walk);
    const std::size_t nx = sl.xp.size();
    double direct = 0.0;
    std::function<void(int, std::size_t, double, double)> walk_paths =
        [&](int j, std::size_t v, double prob, double running) {
            const double here = std::max(running, std::abs(values[j][v]));
            if (j == walk.grid.steps) {
                direct += prob * here * here;
                return;
            }
            for (std::size_t xi = 0; xi < nx; ++xi)
                walk_paths(j + 1, children[j][v * nx + xi], prob * sl.xp[xi],
                           here);
        };
    walk_paths(0, 0, 1.0, 0.0);

    const double fast = expected_running_max_sq(sol, values);
    CHECK(std::abs(fast - direct) < 1e-12);

    // Degenerate table: all zeros gives exactly zero.
    std::vector<std::vector<double>> zeros(values.size());
    for (std::size_t j = 0; j < values.size(); ++j)
        zeros[j].assign(values[j].size(), 0.0);
    CHECK(expected_running_max_sq(sol, zeros) == 0.0);
}

TEST_CASE("fixed point initialization does not change the solution") {
    const WalkLaw walk = pure_jump_walk(1.0, 4);
    const Driver d = linear_y_driver(0.7, 0.3);
    const auto h = terminal_of_xt([](double x) { return std::tanh(x); }, "t");
    SolveOptions a;
    a.fp_init_zero = false;
    SolveOptions b;
    b.fp_init_zero = true;
    const auto sa = backward_solve(walk, d, h, a);
    const auto sb = backward_solve(walk, d, h, b);
    CHECK(std::abs(sa.y0 - sb.y0) < 1e-11);
}

TEST_CASE("guard rails fire") {
    const WalkLaw walk = pure_jump_walk(1.0, 6);
    SolveOptions tiny;
    tiny.node_cap = 10;
    CHECK_THROWS_AS(backward_solve(walk, zero_driver(),
                                   terminal_of_xt([](double x) { return x; },
                                                  "id"),
                                   tiny),
                    StateExplosion);
    // K delta >= 1 is rejected up front.
    CHECK_THROWS_AS(backward_solve(walk, linear_y_driver(7.0, 0.0),
                                   terminal_of_xt([](double x) { return x; },
                                                  "id")),
                    ContractionViolation);
}

TEST_CASE("picard iteration contracts to the implicit solution") {
    const WalkLaw walk = pure_jump_walk(1.0, 8);
    const Driver d = linear_y_driver(0.5, 0.2);
    const auto h = terminal_of_xt([](double x) { return std::tanh(x); }, "t");
    const PicardResult pic = picard_solve(walk, d, h, 50, 1e-12);
    const auto ref = backward_solve(walk, d, h);
    CHECK(pic.distances.back() <= 1e-12);
    CHECK(std::abs(pic.solution.y0 - ref.y0) < 1e-10);
    for (std::size_t k = 2; k < pic.distances.size(); ++k)
        CHECK(pic.distances[k] <= pic.distances[k - 1] + 1e-15);
    CHECK_THROWS_AS(picard_solve(walk, d, h, 1, 1e-14), NonConvergence);
}

TEST_CASE("monitoring dates enter the terminal functional") {
    const WalkLaw walk = pure_jump_walk(1.0, 4, {0.5});
    TerminalCondition running;
    running.eval = [](std::span<const double> xm, double) {
        // xm = (X_0, X_{0.5}, X_T).
        double m = 0.0;
        for (const double x : xm) m = std::max(m, x);
        return m;
    };
    running.lipschitz_K = 1.0;
    running.name = "running_max";
    const auto sol = backward_solve(walk, zero_driver(), running);

    // Against direct enumeration over the joint increments.
    const detail::StepLaw sl = detail::make_step_law(walk);
    const std::size_t nx = sl.xp.size();
    double direct = 0.0;
    std::function<void(int, double, double, double, double)> rec =
        [&](int j, double prob, double x, double x_half, double best) {
            if (j == 4) {
                direct += prob * std::max(best, x);
                return;
            }
            for (std::size_t xi = 0; xi < nx; ++xi) {
                const double nxt = x + walk.x_law.support[xi];
                rec(j + 1, prob * sl.xp[xi], nxt, j + 1 == 2 ? nxt : x_half,
                    j + 1 == 2 ? std::max(best, nxt) : best);
            }
        };
    rec(0, 1.0, 0.0, 0.0, 0.0);
    CHECK(std::abs(sol.y0 - direct) < 1e-12);
}
