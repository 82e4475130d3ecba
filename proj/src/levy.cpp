#include "bsdelta/levy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsdelta/errors.hpp"

namespace bsdelta {
namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double x, double sigma) {
    const double z = x / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

/// Integrate f over (lo, hi) clipped to the model's hard bound, split at 0.
double integrate_clipped(const LevyModel& model,
                         const std::function<double(double)>& f, double lo,
                         double hi, const QuadratureConfig& cfg) {
    const double bound = model.integration_bound;
    lo = std::max(lo, -bound);
    hi = std::min(hi, bound);
    if (lo >= hi) return 0.0;
    if (lo < 0.0 && hi > 0.0)
        return integrate(f, lo, 0.0, cfg) + integrate(f, 0.0, hi, cfg);
    return integrate(f, lo, hi, cfg);
}

/// Smallest radius (on a 1/4-step search grid) whose tail satisfies
/// tail_mass(R) * R^2 < 1e-10; falls back to the hard bound.
double pick_truncation_radius(const LevyModel& model) {
    const QuadratureConfig cfg{1e-13, 4000};
    double r = 1.0;
    while (r < model.integration_bound - 1.0) {
        if (tail_mass(model, r, cfg) * r * r < 1e-10) return r;
        r += 0.25;
    }
    return model.integration_bound - 1.0;
}

/// Shared tail of every builder: compute/validate the second moment, then
/// derive the truncation radius.
void finalize(LevyModel& model) {
    const QuadratureConfig cfg{1e-12, 4000};
    const auto x2 = [&model](double x) { return x * x * model.density(x); };
    const double by_quad =
        integrate_clipped(model, x2, -model.integration_bound,
                          model.integration_bound, cfg);
    if (model.sigma2_closed) {
        if (std::abs(by_quad - *model.sigma2_closed) > 1e-10)
            throw QuadratureDivergence(
                "levy: quadrature second moment disagrees with closed form "
                "for model " +
                model.name);
        model.sigma2 = *model.sigma2_closed;
    } else {
        model.sigma2 = by_quad;
    }
    if (!(model.sigma2 > 1e-10))
        throw DegenerateMeasure("levy: second moment of " + model.name +
                                " is not positive");
    model.truncation_radius = pick_truncation_radius(model);
}

}  // namespace

LevyModel compound_poisson_normal(double lambda, double sigma) {
    if (!(lambda > 0.0) || !(sigma > 0.0))
        throw DegenerateMeasure("compound_poisson_normal: need lambda, sigma > 0");
    LevyModel m;
    m.name = "compound_poisson_normal";
    m.params = {{"lambda", lambda}, {"sigma", sigma}};
    m.density = [lambda, sigma](double x) { return lambda * normal_pdf(x, sigma); };
    m.finite_activity = true;
    m.total_rate = lambda;
    m.sigma2_closed = lambda * sigma * sigma;
    m.bg_index = 0.0;
    m.integration_bound = std::max(16.0 * sigma, 2.0);
    m.symmetric = true;
    m.jump_sampler = [sigma](std::mt19937_64& rng) {
        std::normal_distribution<double> normal(0.0, sigma);
        return normal(rng);
    };
    m.mean_jump_rate = 0.0;
    finalize(m);
    return m;
}

LevyModel compound_poisson_double_exp(double lambda, double p, double eta1,
                                      double eta2) {
    if (!(lambda > 0.0) || !(p >= 0.0) || !(p <= 1.0) || !(eta1 > 0.0) ||
        !(eta2 > 0.0))
        throw DegenerateMeasure(
            "compound_poisson_double_exp: need lambda, eta1, eta2 > 0 and "
            "p in [0,1]");
    LevyModel m;
    m.name = "compound_poisson_double_exp";
    m.params = {{"lambda", lambda}, {"p", p}, {"eta1", eta1}, {"eta2", eta2}};
    m.density = [lambda, p, eta1, eta2](double x) {
        if (x > 0.0) return lambda * p * eta1 * std::exp(-eta1 * x);
        if (x < 0.0) return lambda * (1.0 - p) * eta2 * std::exp(eta2 * x);
        return 0.0;
    };
    m.finite_activity = true;
    m.total_rate = lambda;
    m.sigma2_closed =
        lambda * (2.0 * p / (eta1 * eta1) + 2.0 * (1.0 - p) / (eta2 * eta2));
    m.bg_index = 0.0;
    m.integration_bound = std::max(64.0 / std::min(eta1, eta2), 2.0);
    m.symmetric = (p == 0.5 && eta1 == eta2);
    m.jump_sampler = [p, eta1, eta2](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::exponential_distribution<double> up(eta1), down(eta2);
        return unif(rng) < p ? up(rng) : -down(rng);
    };
    m.mean_jump_rate = lambda * (p / eta1 - (1.0 - p) / eta2);
    finalize(m);
    return m;
}

LevyModel variance_gamma_like(double C, double M) {
    if (!(C > 0.0) || !(M > 0.0))
        throw DegenerateMeasure("variance_gamma_like: need C, M > 0");
    LevyModel m;
    m.name = "variance_gamma_like";
    m.params = {{"C", C}, {"M", M}};
    m.density = [C, M](double x) {
        if (x == 0.0) return 0.0;
        const double ax = std::abs(x);
        return C * std::exp(-M * ax) / ax;
    };
    m.finite_activity = false;
    m.total_rate = std::numeric_limits<double>::infinity();
    m.sigma2_closed = 2.0 * C / (M * M);
    m.bg_index = 0.0;
    m.integration_bound = std::max(64.0 / M, 2.0);
    m.symmetric = true;
    m.jump_sampler = std::nullopt;
    m.mean_jump_rate = 0.0;
    finalize(m);
    return m;
}

double second_moment(const LevyModel& model, const QuadratureConfig& cfg) {
    if (!(model.sigma2 > cfg.tol))
        throw DegenerateMeasure("second_moment: " + model.name +
                                " has no positive second moment");
    return model.sigma2;
}

double tail_mass(const LevyModel& model, double radius,
                 const QuadratureConfig& cfg) {
    if (!model.finite_activity && !(radius > 0.0))
        throw DegenerateMeasure(
            "tail_mass: infinite-activity model needs radius > 0");
    if (radius <= 0.0) return model.total_rate;
    return measure_mass(model, radius, std::numeric_limits<double>::infinity(),
                        cfg) +
           measure_mass(model, -std::numeric_limits<double>::infinity(),
                        -radius, cfg);
}

double partial_mean(const LevyModel& model, std::span<const Interval> set,
                    const QuadratureConfig& cfg) {
    double total = 0.0;
    for (const Interval& iv : set) total += measure_mean(model, iv.lo, iv.hi, cfg);
    return total;
}

double measure_mass(const LevyModel& model, double lo, double hi,
                    const QuadratureConfig& cfg) {
    const auto f = [&model](double x) { return model.density(x); };
    return integrate_clipped(model, f, lo, hi, cfg);
}

double measure_mean(const LevyModel& model, double lo, double hi,
                    const QuadratureConfig& cfg) {
    const auto f = [&model](double x) { return x * model.density(x); };
    return integrate_clipped(model, f, lo, hi, cfg);
}

double measure_x2(const LevyModel& model, double lo, double hi,
                  const QuadratureConfig& cfg) {
    const auto f = [&model](double x) { return x * x * model.density(x); };
    return integrate_clipped(model, f, lo, hi, cfg);
}

}  // namespace bsdelta
