#include <cmath>
#include <vector>

#include "bsdelta/discretize.hpp"
#include "bsdelta/errors.hpp"
#include "bsdelta/levy.hpp"
#include "doctest.h"

using namespace bsdelta;

namespace {

struct Moments {
    double mass = 0.0;
    double mean = 0.0;
    double var = 0.0;
};

Moments law_moments(const IncrementLaw& law) {
    Moments m;
    for (std::size_t i = 0; i < law.support.size(); ++i) {
        m.mass += law.probs[i];
        m.mean += law.support[i] * law.probs[i];
        m.var += law.support[i] * law.support[i] * law.probs[i];
    }
    return m;
}

}  // namespace

TEST_CASE("grid construction and monitoring dates") {
    const TemporalGrid g = make_grid(1.0, 8, {0.25, 0.5});
    CHECK(g.delta() == 0.125);
    REQUIRE(g.monitoring_dates.size() == 4);  // 0 and horizon are implied
    CHECK(g.monitoring_dates.front() == 0.0);
    CHECK(g.monitoring_dates.back() == 1.0);
    CHECK_THROWS_AS(make_grid(1.0, 8, {0.3}), ConfigError);
    CHECK_THROWS_AS(make_grid(1.0, 0), ConfigError);
}

TEST_CASE("central atoms match mass, mean, and variance exactly") {
    const std::vector<LevyModel> models = {
        compound_poisson_normal(1.0, 1.0),
        compound_poisson_double_exp(1.0, 0.7, 2.0, 1.0),
        variance_gamma_like(1.0, 1.0)};
    for (const LevyModel& model : models) {
        for (const double delta : {0.1, 0.02}) {
            const LawBundle b = make_increment_law(model, delta);
            const Moments m = law_moments(b.law);
            CAPTURE(model.name);
            CAPTURE(delta);
            CHECK(std::abs(m.mass - 1.0) < 1e-13);
            CHECK(std::abs(m.mean) < 1e-13);
            CHECK(std::abs(m.var - delta * b.law.sigma2) < 1e-11);
            CHECK(b.law.prob_zero() > 1.0 / 3.0);
        }
    }
}

TEST_CASE("balance thresholds kill the outside mean") {
    const LevyModel kou = compound_poisson_double_exp(1.0, 0.7, 2.0, 1.0);
    const double h = spatial_mesh(0.05, second_moment(kou));
    const auto [hm, hp] = balance_thresholds(kou, h);
    CHECK(hm >= h - 1e-15);
    CHECK(hp >= h - 1e-15);
    const Interval outside[] = {{-kou.integration_bound, -hm},
                                {hp, kou.integration_bound}};
    CHECK(std::abs(partial_mean(kou, outside)) < 1e-9);

    const LevyModel sym = compound_poisson_normal(1.0, 1.0);
    const auto [sm, sp] = balance_thresholds(sym, h);
    CHECK(sm == h);
    CHECK(sp == h);
}

TEST_CASE("unsnapped central atoms are symmetric even for skewed models") {
    const LevyModel kou = compound_poisson_double_exp(1.0, 0.7, 2.0, 1.0);
    DiscretizeOptions opts;
    opts.snap = false;
    const LawBundle b = make_increment_law(kou, 0.05, opts);
    double p_plus = -1.0, p_minus = -1.0;
    for (std::size_t i = 0; i < b.law.support.size(); ++i) {
        if (b.law.atom_index[i] == 1) p_plus = b.law.probs[i];
        if (b.law.atom_index[i] == -1) p_minus = b.law.probs[i];
    }
    REQUIRE(p_plus >= 0.0);
    REQUIRE(p_minus >= 0.0);
    CHECK(std::abs(p_plus - p_minus) < 1e-13);
    CHECK(p_plus <= 1.0 / 6.0 + 1e-13);
}

TEST_CASE("snapping aligns the support and keeps moments exact") {
    const LevyModel kou = compound_poisson_double_exp(1.5, 0.4, 1.5, 2.5);
    const LawBundle b = make_increment_law(kou, 0.05);
    const IncrementLaw& law = b.law;
    REQUIRE(law.unit > 0.0);
    REQUIRE(law.offsets.size() == law.support.size());
    for (std::size_t i = 0; i < law.support.size(); ++i)
        CHECK(law.support[i] ==
              static_cast<double>(law.offsets[i]) * law.unit);
    const Moments m = law_moments(law);
    CHECK(std::abs(m.mass - 1.0) < 1e-13);
    CHECK(std::abs(m.mean) < 1e-13);
    CHECK(std::abs(m.var - law.delta * law.sigma2) < 1e-11);

    // Idempotent: snapping an already snapped law changes nothing.
    const IncrementLaw twice = snap_to_lattice(law, law.kappa);
    REQUIRE(twice.support.size() == law.support.size());
    for (std::size_t i = 0; i < law.support.size(); ++i) {
        CHECK(twice.support[i] == law.support[i]);
        CHECK(std::abs(twice.probs[i] - law.probs[i]) < 1e-15);
    }
}

TEST_CASE("widening achieves the lift bound at small steps") {
    // The bound V >= S is only reachable once the central band is narrow
    // relative to the measure's own scale, hence the small deltas here.
    for (const LevyModel& model :
         {compound_poisson_normal(1.0, 1.0), variance_gamma_like(1.0, 1.0)}) {
        const LawBundle b = make_increment_law(model, 0.05);
        CAPTURE(model.name);
        CHECK(b.layout.lift_bound());
        CHECK(b.layout.v_within >= b.layout.s_central - 1e-12);
    }
}

TEST_CASE("law bookkeeping helpers") {
    const LawBundle b = make_increment_law(compound_poisson_normal(1.0, 1.0),
                                           0.05);
    const IncrementLaw& law = b.law;
    CHECK(law.support[law.zero_pos()] == 0.0);
    CHECK(law.atom_index[law.zero_pos()] == 0);
    double abs_mean = 0.0;
    for (std::size_t i = 0; i < law.support.size(); ++i)
        abs_mean += std::abs(law.support[i]) * law.probs[i];
    CHECK(std::abs(law.abs_mean() - abs_mean) < 1e-15);
    for (std::size_t i = 1; i < law.support.size(); ++i)
        CHECK(law.support[i] > law.support[i - 1]);
}

TEST_CASE("moment condition ladder behaves") {
    const LevyModel m = compound_poisson_normal(1.0, 1.0);
    const std::vector<double> deltas = {0.1, 0.05, 0.025, 0.0125};
    const MomentConditionReport rep = validate_moment_conditions(m, deltas);
    REQUIRE(rep.rows.size() == deltas.size());
    REQUIRE_FALSE(rep.test_names.empty());
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        CHECK(rep.rows[k].xx1_resid < 1e-10);
        CHECK(rep.rows[k].p0 > 1.0 / 3.0);
        if (k > 0)
            CHECK(rep.rows[k].xx0_ratio <
                  rep.rows[k - 1].xx0_ratio + 1e-9);
    }
    CHECK(rep.rows.back().xx0_ratio < rep.rows.front().xx0_ratio);
}
