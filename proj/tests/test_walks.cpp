#include <cmath>
#include <set>

#include "bsdelta/levy.hpp"
#include "bsdelta/walks.hpp"
#include "doctest.h"

using namespace bsdelta;

TEST_CASE("brownian increment laws match the first two moments") {
    for (const double delta : {0.25, 0.01}) {
        const IncrementLaw r =
            brownian_increment_law(delta, BrownianVariant::rademacher);
        REQUIRE(r.support.size() == 2);
        CHECK(std::abs(r.support.back() - std::sqrt(delta)) < 1e-15);
        CHECK(check_brownian_condition(r) < 1e-15);

        const IncrementLaw t =
            brownian_increment_law(delta, BrownianVariant::trinomial);
        REQUIRE(t.support.size() == 3);
        CHECK(t.support[1] == 0.0);
        CHECK(t.prob_zero() > 0.0);
        CHECK(check_brownian_condition(t) < 1e-15);
    }
}

TEST_CASE("path sampling is deterministic and batch-size independent") {
    WalkLaw walk;
    walk.grid = make_grid(1.0, 5);
    walk.x_law =
        make_increment_law(compound_poisson_normal(1.0, 1.0), 0.2).law;

    const PathBatch a = sample_paths(walk, 4, 99);
    const PathBatch b = sample_paths(walk, 4, 99);
    CHECK(a.x == b.x);

    const PathBatch c = sample_paths(walk, 1, 99);
    for (int j = 0; j <= 5; ++j) CHECK(c.x[j] == a.x[j]);

    const PathBatch d = sample_paths(walk, 4, 100);
    CHECK(a.x != d.x);
}

TEST_CASE("sampled increments live on the law support") {
    WalkLaw walk;
    walk.grid = make_grid(0.5, 4);
    walk.x_law =
        make_increment_law(compound_poisson_normal(1.0, 1.0), 0.125).law;
    walk.w_law =
        brownian_increment_law(0.125, BrownianVariant::rademacher);

    const PathBatch batch = sample_paths(walk, 50, 7);
    REQUIRE(batch.x.size() == 50 * 5);
    REQUIRE(batch.w.size() == 50 * 5);

    std::set<double> x_atoms(walk.x_law.support.begin(),
                             walk.x_law.support.end());
    for (int r = 0; r < 50; ++r) {
        CHECK(batch.x[r * 5] == 0.0);
        CHECK(batch.w[r * 5] == 0.0);
        for (int j = 0; j < 4; ++j) {
            const double dx = batch.x[r * 5 + j + 1] - batch.x[r * 5 + j];
            // The increment must be (up to rounding in the cumulative sum)
            // one of the finitely many atoms.
            double best = 1e300;
            for (const double atom : x_atoms)
                best = std::min(best, std::abs(dx - atom));
            CHECK(best < 1e-12);
            const double dw =
                std::abs(batch.w[r * 5 + j + 1] - batch.w[r * 5 + j]);
            CHECK(std::abs(dw - std::sqrt(0.125)) < 1e-12);
        }
    }
}

TEST_CASE("empirical path moments are in the right ballpark") {
    WalkLaw walk;
    walk.grid = make_grid(1.0, 10);
    const LevyModel model = compound_poisson_normal(1.0, 1.0);
    walk.x_law = make_increment_law(model, 0.1).law;
    const int n = 4000;
    const PathBatch batch = sample_paths(walk, n, 11);
    double mean = 0.0, second = 0.0;
    for (int r = 0; r < n; ++r) {
        const double xt = batch.x[r * 11 + 10];
        mean += xt;
        second += xt * xt;
    }
    mean /= n;
    second /= n;
    // Var X_T = T Sigma^2 = 1; standard errors ~ 1/sqrt(n).
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(second - 1.0) < 10.0 / std::sqrt(double(n)));
}
