#include "bsdelta/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "bsdelta/errors.hpp"

namespace bsdelta {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bin integrals need to be much tighter than user-facing tolerances so the
/// residuals folded into the central atoms stay at rounding level.
QuadratureConfig tight(const QuadratureConfig& cfg) {
    return QuadratureConfig{std::min(cfg.tol, 1e-14), cfg.max_panels};
}

/// Signed mean of the jump measure outside [-left, right].
double outer_mean(const LevyModel& model, double left, double right,
                  const QuadratureConfig& cfg) {
    return measure_mean(model, right, kInf, cfg) +
           measure_mean(model, -kInf, -left, cfg);
}

/// Bisection for the root of a monotone decreasing function on [lo, hi].
double bisect_root(const std::function<double(double)>& f, double lo,
                   double hi, double target_resid) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo < 0.0 || fhi > 0.0)
        throw NoBalancePoint("balance_thresholds: tail mean does not change sign");
    double mid = lo;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= target_resid) return mid;
        if (fm > 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) return 0.5 * (lo + hi);
    }
    // The interval collapsed without meeting the residual target; accept the
    // midpoint only if the residual is within an order of the target.
    if (std::abs(f(mid)) <= 100.0 * target_resid) return mid;
    throw BisectionStall("balance_thresholds: no convergence in 200 iterations");
}

/// Measure data for one side of the bin partition, ascending in |x|.
/// `base` is the inner threshold, `width` the regular bin width, `sign` +-1.
std::vector<Bin> side_bins(const LevyModel& model, double base, double width,
                           double radius, int sign,
                           const QuadratureConfig& cfg) {
    std::vector<Bin> out;
    std::vector<std::pair<double, double>> spans;  // |lo|, |hi| ascending
    for (double lo = base; lo < radius;) {
        const double hi = std::min(lo + width, radius);
        if (hi - lo > 1e-12 * std::max(1.0, radius)) spans.emplace_back(lo, hi);
        lo = hi;
    }
    spans.emplace_back(std::max(base, radius), kInf);  // overflow bin
    int idx = 2;
    for (const auto& [alo, ahi] : spans) {
        Bin b;
        b.index = sign * idx;
        b.lo = sign > 0 ? alo : (ahi == kInf ? -kInf : -ahi);
        b.hi = sign > 0 ? ahi : -alo;
        b.mass = measure_mass(model, b.lo, b.hi, cfg);
        b.mean_x = measure_mean(model, b.lo, b.hi, cfg);
        b.x2 = measure_x2(model, b.lo, b.hi, cfg);
        if (!(b.mass > 0.0)) {
            std::ostringstream msg;
            msg << "build_bins: bin (" << b.lo << ", " << b.hi
                << "] of " << model.name << " received no mass";
            throw EmptyBin(msg.str());
        }
        out.push_back(b);
        ++idx;
    }
    return out;
}

/// Central-atom probabilities from the exact moment constraints.
/// `tail_p`, `tail_px`, `tail_px2` are sums over the large-jump atoms.
struct CentralAtoms {
    double p_minus;
    double p_zero;
    double p_plus;
};

CentralAtoms solve_central(double h, double delta, double sigma2, double tail_p,
                           double tail_px, double tail_px2) {
    const double m0 = 1.0 - tail_p;
    const double m1 = -tail_px;
    const double m2 = delta * sigma2 - tail_px2;
    const double a = m2 / (h * h);
    const double b = m1 / h;
    CentralAtoms c{0.5 * (a - b), m0 - a, 0.5 * (a + b)};
    const double eps = 1e-9;
    if (!(c.p_minus >= 0.0) || !(c.p_plus >= 0.0) || !(c.p_zero >= 0.0) ||
        c.p_minus > 1.0 / 6.0 + eps || c.p_plus > 1.0 / 6.0 + eps ||
        c.p_zero > 1.0)
        throw InfeasibleRebalance(
            "increment_law: central atom probabilities left the simplex");
    if (!(c.p_zero > 1.0 / 3.0))
        throw ZeroJumpViolated(
            "increment_law: P(no jump) <= 1/3; the step size is too coarse "
            "for this measure");
    return c;
}

/// Sums tail-atom moments pairing +k with -k so symmetric layouts cancel
/// exactly in floating point.
void paired_tail_moments(const std::map<int, std::pair<double, double>>& atoms,
                         double* p, double* px, double* px2) {
    *p = 0.0;
    *px = 0.0;
    *px2 = 0.0;
    int max_idx = 0;
    for (const auto& [idx, _] : atoms) max_idx = std::max(max_idx, std::abs(idx));
    for (int k = 2; k <= max_idx; ++k) {
        for (int sgn : {+1, -1}) {
            const auto it = atoms.find(sgn * k);
            if (it == atoms.end()) continue;
            const auto [prob, x] = it->second;
            *p += prob;
            *px += prob * x;
            *px2 += prob * x * x;
        }
    }
}

}  // namespace

TemporalGrid make_grid(double horizon, int steps,
                       std::vector<double> monitoring) {
    if (!(horizon > 0.0) || steps < 1)
        throw ConfigError("make_grid: need horizon > 0 and steps >= 1");
    TemporalGrid grid;
    grid.horizon = horizon;
    grid.steps = steps;
    if (monitoring.empty()) monitoring = {0.0, horizon};
    monitoring.push_back(0.0);
    monitoring.push_back(horizon);
    std::sort(monitoring.begin(), monitoring.end());
    monitoring.erase(std::unique(monitoring.begin(), monitoring.end(),
                                 [horizon](double a, double b) {
                                     return std::abs(a - b) < 1e-12 * horizon;
                                 }),
                     monitoring.end());
    const double delta = grid.delta();
    for (double s : monitoring) {
        if (s < -1e-12 || s > horizon * (1.0 + 1e-12))
            throw ConfigError("make_grid: monitoring date outside [0, horizon]");
        const double k = std::round(s / delta);
        if (std::abs(s - k * delta) > 1e-9 * horizon)
            throw ConfigError(
                "make_grid: monitoring dates must lie on the uniform grid");
    }
    grid.monitoring_dates = std::move(monitoring);
    return grid;
}

std::size_t IncrementLaw::zero_pos() const {
    const auto it = std::lower_bound(support.begin(), support.end(), 0.0);
    if (it == support.end() || *it != 0.0)
        throw SupportMismatch("IncrementLaw: support does not contain 0");
    return static_cast<std::size_t>(it - support.begin());
}

double IncrementLaw::prob_zero() const { return probs[zero_pos()]; }

double IncrementLaw::abs_mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
        s += std::abs(support[i]) * probs[i];
    return s;
}

double spatial_mesh(double delta, double sigma2) {
    if (!(delta > 0.0) || !(sigma2 > 0.0))
        throw DegenerateMeasure("spatial_mesh: need delta > 0 and sigma2 > 0");
    return std::sqrt(3.0 * delta * sigma2);
}

std::pair<double, double> balance_thresholds(const LevyModel& model, double h,
                                             const QuadratureConfig& cfg) {
    if (!(h > 0.0))
        throw DegenerateMeasure("balance_thresholds: need h > 0");
    if (model.symmetric) return {h, h};
    const QuadratureConfig q = tight(cfg);
    const double resid_target = 1e-13;
    const double a0 = outer_mean(model, h, h, q);
    if (std::abs(a0) <= resid_target) return {h, h};
    if (a0 > 0.0) {
        // Surplus mean on the right: freeze the left threshold, grow the
        // right one until the outer mean crosses zero.
        const double left_part = measure_mean(model, -kInf, -h, q);
        const auto f = [&](double u) {
            return measure_mean(model, u, kInf, q) + left_part;
        };
        double hi = 2.0 * h;
        while (f(hi) > 0.0 && hi < model.integration_bound) hi *= 2.0;
        return {h, bisect_root(f, h, hi, resid_target)};
    }
    const double right_part = measure_mean(model, h, kInf, q);
    const auto f = [&](double u) {
        return -(measure_mean(model, -kInf, -u, q) + right_part);
    };
    double hi = 2.0 * h;
    while (f(hi) > 0.0 && hi < model.integration_bound) hi *= 2.0;
    return {bisect_root(f, h, hi, resid_target), h};
}

BinLayout build_bins(const LevyModel& model, double delta, double h,
                     double h_minus, double h_plus, double bin_width,
                     const QuadratureConfig& cfg) {
    if (!(bin_width > 0.0) || !(h_minus >= h) || !(h_plus >= h))
        throw DegenerateMeasure("build_bins: bad thresholds or width");
    const QuadratureConfig q = tight(cfg);
    BinLayout layout;
    layout.delta = delta;
    layout.sigma2 = second_moment(model, cfg);
    layout.h = h;
    layout.h_minus = h_minus;
    layout.h_plus = h_plus;
    layout.bin_width = bin_width;
    layout.truncation_radius = model.truncation_radius;

    std::vector<Bin> pos =
        side_bins(model, h_plus, bin_width, model.truncation_radius, +1, q);
    std::vector<Bin> neg;
    if (model.symmetric && h_minus == h_plus) {
        // Mirror the positive side so the two sides cancel exactly.
        neg.reserve(pos.size());
        for (const Bin& b : pos) {
            Bin m = b;
            m.index = -b.index;
            m.lo = (b.hi == kInf) ? -kInf : -b.hi;
            m.hi = -b.lo;
            m.mean_x = -b.mean_x;
            neg.push_back(m);
        }
    } else {
        neg = side_bins(model, h_minus, bin_width, model.truncation_radius, -1, q);
    }
    std::reverse(neg.begin(), neg.end());
    layout.bins = std::move(neg);
    layout.bins.insert(layout.bins.end(), pos.begin(), pos.end());

    layout.s_central = measure_x2(model, -h_minus, h_plus, q);
    double v = 0.0;
    for (const Bin& b : layout.bins) {
        const double within = b.x2 - b.mean_x * b.mean_x / b.mass;
        if (within < -1e-12)
            throw NegativeVariance(
                "build_bins: within-bin variance below -1e-12");
        v += std::max(within, 0.0);
    }
    layout.v_within = v;
    return layout;
}

IncrementLaw increment_law(const LevyModel& model, const BinLayout& layout,
                           const QuadratureConfig& cfg) {
    (void)model;
    (void)cfg;  // all integrals already live in the layout
    IncrementLaw law;
    law.delta = layout.delta;
    law.sigma2 = layout.sigma2;
    law.h = layout.h;

    std::map<int, std::pair<double, double>> atoms;  // index -> (p, x)
    for (const Bin& b : layout.bins) {
        const double p = layout.delta * b.mass;
        atoms[b.index] = {p, b.rep()};
        if (!(p > 0.0)) throw EmptyBin("increment_law: zero-probability bin");
    }
    double tail_p, tail_px, tail_px2;
    paired_tail_moments(atoms, &tail_p, &tail_px, &tail_px2);
    const CentralAtoms c = solve_central(layout.h, layout.delta, layout.sigma2,
                                         tail_p, tail_px, tail_px2);
    atoms[-1] = {c.p_minus, -layout.h};
    atoms[0] = {c.p_zero, 0.0};
    atoms[+1] = {c.p_plus, layout.h};

    std::vector<std::pair<double, int>> order;  // (x, index)
    order.reserve(atoms.size());
    for (const auto& [idx, px] : atoms) order.emplace_back(px.second, idx);
    std::sort(order.begin(), order.end());
    for (std::size_t i = 1; i < order.size(); ++i)
        if (order[i].first == order[i - 1].first)
            throw InfeasibleRebalance("increment_law: coincident atoms");
    for (const auto& [x, idx] : order) {
        law.support.push_back(x);
        law.probs.push_back(atoms[idx].first);
        law.atom_index.push_back(idx);
    }
    return law;
}

IncrementLaw snap_to_lattice(const IncrementLaw& law, int kappa) {
    if (kappa < 1)
        throw ConfigError("snap_to_lattice: kappa must be a positive integer");
    IncrementLaw out = law;
    out.kappa = kappa;
    out.unit = law.h / kappa;

    std::map<int, std::pair<double, double>> atoms;  // index -> (p, snapped x)
    std::map<int, std::int64_t> offs;
    for (std::size_t i = 0; i < law.support.size(); ++i) {
        const int idx = law.atom_index[i];
        std::int64_t n = 0;
        if (idx == 0)
            n = 0;
        else if (idx == 1)
            n = kappa;
        else if (idx == -1)
            n = -kappa;
        else
            n = std::llround(law.support[i] / out.unit);
        atoms[idx] = {law.probs[i], static_cast<double>(n) * out.unit};
        offs[idx] = n;
    }
    double tail_p, tail_px, tail_px2;
    paired_tail_moments(atoms, &tail_p, &tail_px, &tail_px2);
    const CentralAtoms c = solve_central(law.h, law.delta, law.sigma2, tail_p,
                                         tail_px, tail_px2);
    atoms[-1].first = c.p_minus;
    atoms[0].first = c.p_zero;
    atoms[+1].first = c.p_plus;

    std::vector<std::pair<std::int64_t, int>> order;  // (offset, index)
    order.reserve(atoms.size());
    for (const auto& [idx, _] : atoms) order.emplace_back(offs[idx], idx);
    std::sort(order.begin(), order.end());
    for (std::size_t i = 1; i < order.size(); ++i)
        if (order[i].first == order[i - 1].first)
            throw InfeasibleRebalance(
                "snap_to_lattice: two atoms snapped to the same lattice site; "
                "increase kappa or the bin width");
    out.support.clear();
    out.probs.clear();
    out.atom_index.clear();
    out.offsets.clear();
    for (const auto& [n, idx] : order) {
        out.support.push_back(static_cast<double>(n) * out.unit);
        out.probs.push_back(atoms[idx].first);
        out.atom_index.push_back(idx);
        out.offsets.push_back(n);
    }
    return out;
}

LawBundle make_increment_law(const LevyModel& model, double delta,
                             const DiscretizeOptions& opts,
                             const QuadratureConfig& cfg) {
    const double sigma2 = second_moment(model, cfg);
    const double h = spatial_mesh(delta, sigma2);
    const auto [h_minus, h_plus] = balance_thresholds(model, h, cfg);
    const double w0 = opts.bin_width_factor * h;

    BinLayout layout;
    for (int m = 1; m <= opts.max_width_multiple; ++m) {
        layout = build_bins(model, delta, h, h_minus, h_plus, m * w0, cfg);
        if (!opts.widen_for_lift || layout.lift_bound()) break;
        // One regular bin plus the overflow per side: widening is exhausted.
        if (layout.bins.size() <= 4) break;
    }
    LawBundle bundle;
    bundle.law = increment_law(model, layout, cfg);
    if (opts.snap) {
        // Coarse lattices can round a bin representative so far that the
        // moment re-solve goes infeasible (or two atoms collide); refining
        // the lattice restores feasibility, so escalate kappa as needed.
        int kappa = std::max(1, opts.kappa);
        for (int tries = 0;; ++tries, kappa *= 2) {
            try {
                bundle.law = snap_to_lattice(bundle.law, kappa);
                break;
            } catch (const InfeasibleRebalance&) {
                if (tries == 6) throw;
            } catch (const ZeroJumpViolated&) {
                if (tries == 6) throw;
            }
        }
    }
    bundle.layout = std::move(layout);
    return bundle;
}

MomentConditionReport validate_moment_conditions(const LevyModel& model,
                                                 std::span<const double> deltas,
                                                 const DiscretizeOptions& opts,
                                                 const QuadratureConfig& cfg) {
    struct TestFn {
        std::string name;
        double inner;  // g vanishes on |x| < inner
        std::function<double(double)> g;
    };
    const auto ramp = [](double t) { return std::min(1.0, std::max(0.0, t)); };
    const std::vector<TestFn> family = {
        {"ramp_quarter", 0.25,
         [ramp](double x) { return ramp(std::abs(x) / 0.25 - 1.0); }},
        {"ramp_half", 0.5,
         [ramp](double x) { return ramp(std::abs(x) / 0.5 - 1.0); }},
        {"odd_tanh", 0.5,
         [ramp](double x) { return ramp(std::abs(x) / 0.5 - 1.0) * std::tanh(x); }},
        {"bump_decay", 1.0,
         [ramp](double x) {
             return ramp(std::abs(x) - 1.0) * std::exp(-std::abs(x));
         }},
    };

    MomentConditionReport report;
    for (const TestFn& t : family) {
        report.test_names.push_back(t.name);
        report.test_inner.push_back(t.inner);
    }
    const QuadratureConfig q = tight(cfg);
    for (double delta : deltas) {
        const LawBundle bundle = make_increment_law(model, delta, opts, cfg);
        const IncrementLaw& law = bundle.law;
        MomentRow row;
        row.delta = delta;
        row.xx0_ratio = law.abs_mean() / std::sqrt(delta);
        double var = 0.0;
        for (std::size_t i = 0; i < law.support.size(); ++i)
            var += law.support[i] * law.support[i] * law.probs[i];
        row.xx1_resid = std::abs(var / delta - law.sigma2);
        row.p0 = law.prob_zero();
        for (const TestFn& t : family) {
            double discrete = 0.0;
            for (std::size_t i = 0; i < law.support.size(); ++i)
                if (law.support[i] != 0.0)
                    discrete += t.g(law.support[i]) * law.probs[i] / delta;
            const auto gd = [&](double x) { return t.g(x) * model.density(x); };
            const double continuous =
                integrate(gd, t.inner, model.integration_bound, q) +
                integrate(gd, -model.integration_bound, -t.inner, q);
            row.xx2.push_back(std::abs(discrete - continuous));
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace bsdelta
