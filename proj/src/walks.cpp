#include "bsdelta/walks.hpp"

#include <cmath>
#include <ostream>

#include "bsdelta/errors.hpp"
#include "bsdelta/rng.hpp"

namespace bsdelta {

IncrementLaw brownian_increment_law(double delta, BrownianVariant variant) {
    if (!(delta > 0.0))
        throw ConfigError("brownian_increment_law: need delta > 0");
    IncrementLaw law;
    law.delta = delta;
    law.sigma2 = 0.0;  // not a jump law
    law.kappa = 1;
    if (variant == BrownianVariant::rademacher) {
        const double s = std::sqrt(delta);
        law.unit = s;
        law.h = s;
        law.support = {-s, s};
        law.probs = {0.5, 0.5};
        law.atom_index = {-1, 1};
        law.offsets = {-1, 1};
    } else {
        // Variance of the three-point law is (2/3) c^2 = delta.
        const double c = std::sqrt(1.5 * delta);
        law.unit = c;
        law.h = c;
        law.support = {-c, 0.0, c};
        law.probs = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        law.atom_index = {-1, 0, 1};
        law.offsets = {-1, 0, 1};
    }
    return law;
}

double check_brownian_condition(const IncrementLaw& law) {
    double mean = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < law.support.size(); ++i) {
        mean += law.support[i] * law.probs[i];
        var += law.support[i] * law.support[i] * law.probs[i];
    }
    return std::max(std::abs(mean), std::abs(var - law.delta));
}

namespace {

/// Inverse-CDF draw from a discrete law; cumulative sums are formed once by
/// the caller for determinism and speed.
std::size_t draw(const std::vector<double>& cdf, double u) {
    std::size_t lo = 0;
    std::size_t hi = cdf.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (u <= cdf[mid])
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

std::vector<double> cumulative(const std::vector<double>& probs) {
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;  // guard against rounding at the top
    return cdf;
}

}  // namespace

PathBatch sample_paths(const WalkLaw& walk, int n_paths, std::uint64_t seed) {
    if (n_paths < 0) throw ConfigError("sample_paths: n_paths must be >= 0");
    const int steps = walk.grid.steps;
    PathBatch batch;
    batch.n_paths = n_paths;
    batch.steps = steps;
    batch.x.assign(static_cast<std::size_t>(n_paths) * (steps + 1), 0.0);
    if (walk.mixed())
        batch.w.assign(static_cast<std::size_t>(n_paths) * (steps + 1), 0.0);

    const std::vector<double> x_cdf = cumulative(walk.x_law.probs);
    std::vector<double> w_cdf;
    if (walk.mixed()) w_cdf = cumulative(walk.w_law->probs);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int r = 0; r < n_paths; ++r) {
        std::mt19937_64 rng = substream(seed, static_cast<std::uint64_t>(r));
        const std::size_t base = static_cast<std::size_t>(r) * (steps + 1);
        double xs = 0.0;
        double ws = 0.0;
        for (int j = 1; j <= steps; ++j) {
            xs += walk.x_law.support[draw(x_cdf, unif(rng))];
            batch.x[base + j] = xs;
            if (walk.mixed()) {
                ws += walk.w_law->support[draw(w_cdf, unif(rng))];
                batch.w[base + j] = ws;
            }
        }
    }
    return batch;
}

namespace {

const std::vector<double>& component(const PathBatch& b, char which) {
    if (which == 'x') return b.x;
    if (which == 'w' && !b.w.empty()) return b.w;
    throw ConfigError("PathBatch: unknown or absent component");
}

}  // namespace

void PathBatch::write_csv(std::ostream& os, char which) const {
    const std::vector<double>& data = component(*this, which);
    for (int r = 0; r < n_paths; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * (steps + 1);
        for (int j = 0; j <= steps; ++j) {
            if (j > 0) os << ',';
            os << data[base + j];
        }
        os << '\n';
    }
}

void PathBatch::write_binary(std::ostream& os, char which) const {
    const std::vector<double>& data = component(*this, which);
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
}

}  // namespace bsdelta
