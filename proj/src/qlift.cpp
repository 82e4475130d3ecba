#include "bsdelta/qlift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsdelta/errors.hpp"

namespace bsdelta {
namespace {

const double kSqrt2 = std::sqrt(2.0);

/// Position of the atom carrying the given construction index (0, +-1 for
/// the central atoms, bin index otherwise); linear scan, supports are small.
std::size_t atom_pos(const IncrementLaw& law, int index) {
    for (std::size_t i = 0; i < law.atom_index.size(); ++i)
        if (law.atom_index[i] == index) return i;
    throw SupportMismatch("q_eval: law has no atom with the requested index");
}

/// Bin containing x, or nullptr when x lies in the central band.
const Bin* find_bin(const BinLayout& layout, double x) {
    const auto it = std::upper_bound(
        layout.bins.begin(), layout.bins.end(), x,
        [](double v, const Bin& b) { return v < b.lo; });
    if (it == layout.bins.begin()) return nullptr;
    const Bin& b = *(it - 1);
    if (x > b.lo && x <= b.hi) return &b;
    return nullptr;
}

}  // namespace

double q_eval(const IncrementLaw& law, const BinLayout& layout,
              std::span<const double> ztable, double x) {
    if (ztable.size() != law.support.size())
        throw SupportMismatch("q_eval: table size does not match the support");
    if (x == 0.0) return 0.0;
    if (x >= -layout.h_minus && x <= layout.h_plus) {
        const double zp = ztable[atom_pos(law, +1)];
        const double zm = ztable[atom_pos(law, -1)];
        return x / (kSqrt2 * law.h) * (zm + zp);
    }
    const Bin* b = find_bin(layout, x);
    if (b == nullptr)
        throw SupportMismatch("q_eval: x falls outside every bin");
    return ztable[atom_pos(law, b->index)];
}

double i_q(const LevyModel& model, const IncrementLaw& law,
           const BinLayout& layout, std::span<const double> z1,
           std::span<const double> z0, const QuadratureConfig& cfg) {
    if (z1.size() != law.support.size() || z0.size() != law.support.size())
        throw SupportMismatch("i_q: table size does not match the support");
    std::vector<double> diff(z1.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = z1[i] - z0[i];

    const auto integrand = [&](double x) {
        const double q = q_eval(law, layout, diff, x);
        return q * q * model.density(x);
    };
    const QuadratureConfig per{cfg.tol / (layout.bins.size() + 2.0),
                               cfg.max_panels};
    double total = integrate(integrand, -layout.h_minus, 0.0, per) +
                   integrate(integrand, 0.0, layout.h_plus, per);
    for (const Bin& b : layout.bins) {
        const double hi = std::min(b.hi, model.integration_bound);
        total += integrate(integrand, b.lo == -std::numeric_limits<double>::infinity()
                                          ? -model.integration_bound
                                          : b.lo,
                           hi, per);
    }
    return total;
}

double pi_norm2(const IncrementLaw& law, std::span<const double> ztable) {
    if (ztable.size() != law.support.size())
        throw SupportMismatch("pi_norm2: table size does not match the support");
    double total = 0.0;
    for (std::size_t i = 0; i < ztable.size(); ++i)
        if (law.support[i] != 0.0)
            total += ztable[i] * ztable[i] * law.probs[i] / law.delta;
    return total;
}

Driver lift_driver(const DriverSpec& spec, const LevyModel& model,
                   const IncrementLaw& law, const BinLayout& layout,
                   const QuadratureConfig& cfg) {
    switch (spec.kind) {
        case DriverSpec::Kind::zero:
            return zero_driver();
        case DriverSpec::Kind::constant:
            return constant_driver(spec.c);
        case DriverSpec::Kind::linear_y:
            return linear_y_driver(spec.a, spec.c);
        case DriverSpec::Kind::jump_integral:
            break;
    }
    if (!spec.rho)
        throw ConfigError("lift_driver: jump_integral driver needs a weight");

    // One weight per support atom: bin atoms carry the integral of
    // rho(x) * x over their bin; the +-h atoms carry the central-band
    // integral of rho(x) * x^2 / (sqrt(2) h) coming from the linear branch
    // of the lift.
    const QuadratureConfig q{std::min(cfg.tol, 1e-13), cfg.max_panels};
    std::vector<double> weights(law.support.size(), 0.0);
    const auto rho_x = [&](double x) { return spec.rho(x) * x * model.density(x); };
    const auto rho_x2 = [&](double x) {
        return spec.rho(x) * x * x * model.density(x);
    };
    double central = integrate(rho_x2, -layout.h_minus, 0.0, q) +
                     integrate(rho_x2, 0.0, layout.h_plus, q);
    central /= kSqrt2 * law.h;
    for (std::size_t i = 0; i < law.support.size(); ++i) {
        const int idx = law.atom_index[i];
        if (idx == 0) continue;
        if (idx == 1 || idx == -1) {
            weights[i] = central;
            continue;
        }
        const Bin* b = nullptr;
        for (const Bin& cand : layout.bins)
            if (cand.index == idx) b = &cand;
        if (b == nullptr)
            throw SupportMismatch("lift_driver: law atom without a bin");
        const double lo = std::max(b->lo, -model.integration_bound);
        const double hi = std::min(b->hi, model.integration_bound);
        weights[i] = integrate(rho_x, lo, hi, q);
    }

    // Lipschitz constant of the continuous driver in the jump argument.
    const auto rho2_x2 = [&](double x) {
        const double r = spec.rho(x);
        return r * r * x * x * model.density(x);
    };
    const double k_jump = std::sqrt(
        integrate(rho2_x2, -model.integration_bound, 0.0, q) +
        integrate(rho2_x2, 0.0, model.integration_bound, q));

    Driver d;
    d.eval = [spec, weights](double, double y, double z,
                             std::span<const double> zt) {
        double acc = spec.c + spec.a * y + spec.b * z;
        for (std::size_t i = 0; i < weights.size(); ++i)
            acc += weights[i] * zt[i];
        return acc;
    };
    d.lipschitz_K = std::abs(spec.a) + std::abs(spec.b) + k_jump;
    d.depends_y = spec.a != 0.0;
    d.depends_z = spec.b != 0.0;
    d.depends_zt = true;
    d.name = "jump_integral";
    return d;
}

}  // namespace bsdelta
