#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bsdelta/levy.hpp"
#include "bsdelta/quadrature.hpp"

namespace bsdelta {

/// Uniform time grid on [0, horizon] with `steps` intervals, plus the dates
/// at which the terminal functional reads the jump path.  Monitoring dates
/// must sit on the grid; 0 and horizon are always included.
struct TemporalGrid {
    double horizon = 1.0;
    int steps = 1;
    std::vector<double> monitoring_dates;

    double delta() const { return horizon / steps; }
};

/// Builds and validates a grid.  `monitoring` defaults to {0, horizon}.
TemporalGrid make_grid(double horizon, int steps,
                       std::vector<double> monitoring = {});

/// One spatial bin of the truncated jump support, with its measure data.
struct Bin {
    int index = 0;       // |index| >= 2; positive side has index >= 2
    double lo = 0.0;     // (lo, hi]; hi == +infinity marks the overflow bin
    double hi = 0.0;
    double mass = 0.0;   // nu(B)
    double mean_x = 0.0; // integral of x over B (unnormalized)
    double x2 = 0.0;     // integral of x^2 over B

    /// Conditional mean of the bin, the representative jump size.
    double rep() const { return mean_x / mass; }
};

/// Spatial layout for one step size: balance thresholds, bin partition of
/// the large-jump region, and the split of the second moment into the
/// central part S and the within-bin variance V.
struct BinLayout {
    double delta = 0.0;
    double sigma2 = 0.0;
    double h = 0.0;        // base mesh sqrt(3 * delta * sigma2)
    double h_minus = 0.0;  // central band is [-h_minus, h_plus]
    double h_plus = 0.0;
    double bin_width = 0.0;
    double truncation_radius = 0.0;
    std::vector<Bin> bins;  // sorted by lo; negative side first
    double s_central = 0.0; // integral of x^2 nu over [-h_minus, h_plus]
    double v_within = 0.0;  // sum over bins of (x2 - mass * rep^2)

    /// True when V >= S, which makes the piecewise lift non-expanding.
    bool lift_bound() const { return v_within >= s_central; }
};

/// Discrete law of one walk increment: finitely many atoms matching the
/// measure's mass/mean/variance exactly (to rounding).
struct IncrementLaw {
    std::vector<double> support;  // ascending; always contains 0
    std::vector<double> probs;    // aligned with support, sums to 1
    std::vector<int> atom_index;  // 0/+-1 for the central atoms, else bin index
    double delta = 0.0;
    double sigma2 = 0.0;
    double h = 0.0;               // central atom magnitude
    double zero_prob_bound = 1.0 / 3.0;

    // Lattice alignment: support[i] == offsets[i] * unit when unit > 0.
    double unit = 0.0;
    std::vector<std::int64_t> offsets;
    int kappa = 0;

    std::size_t zero_pos() const;      // position of the 0 atom
    double prob_zero() const;          // P(increment == 0)
    double abs_mean() const;           // E|increment|
};

/// Base mesh width h = sqrt(3 * delta * sigma2).
double spatial_mesh(double delta, double sigma2);

/// Thresholds (h_minus, h_plus) >= h such that the jump measure outside
/// [-h_minus, h_plus] has zero mean: one side keeps h, the other grows until
/// the signed tail mean crosses zero (bisection to 1e-12).
std::pair<double, double> balance_thresholds(const LevyModel& model, double h,
                                             const QuadratureConfig& cfg = {});

/// Partition of [-R, -h_minus) and (h_plus, R] into width-`bin_width` bins
/// plus one overflow bin per side, with per-bin mass/mean/x2 by quadrature.
/// Symmetric models get exactly mirrored data.  Throws EmptyBin if any bin
/// has no mass.
BinLayout build_bins(const LevyModel& model, double delta, double h,
                     double h_minus, double h_plus, double bin_width,
                     const QuadratureConfig& cfg = {});

/// Discrete increment law on the layout: large-jump atoms at the bin
/// representatives with p_i = delta * nu(B_i), central atoms at {-h, 0, +h}
/// with probabilities solved from the exact mass/mean/variance constraints.
IncrementLaw increment_law(const LevyModel& model, const BinLayout& layout,
                           const QuadratureConfig& cfg = {});

/// Rounds every atom to the lattice {k * h / kappa} and re-solves the central
/// probabilities so mass/mean/variance stay exact.  Idempotent.
IncrementLaw snap_to_lattice(const IncrementLaw& law, int kappa);

/// Construction knobs used by make_increment_law.
struct DiscretizeOptions {
    double bin_width_factor = 1.0;  // initial width as a multiple of h
    int kappa = 8;                  // lattice refinement of h
    bool widen_for_lift = true;     // grow bins until V >= S
    int max_width_multiple = 64;    // widening search cap
    bool snap = true;
};

/// End-to-end construction for one step size: mesh, thresholds, bins
/// (widened until the lift bound V >= S holds when requested), law, snap.
struct LawBundle {
    BinLayout layout;
    IncrementLaw law;
};
LawBundle make_increment_law(const LevyModel& model, double delta,
                             const DiscretizeOptions& opts = {},
                             const QuadratureConfig& cfg = {});

/// One row of the small-step moment diagnostics.
struct MomentRow {
    double delta = 0.0;
    double xx0_ratio = 0.0;   // E|dX| / sqrt(delta)
    double xx1_resid = 0.0;   // |sum x^2 p / delta - sigma2|
    double p0 = 0.0;          // P(dX = 0)
    std::vector<double> xx2;  // |int g d nu_pi - int g d nu| per test function
};

struct MomentConditionReport {
    std::vector<std::string> test_names;
    std::vector<double> test_inner;   // each g vanishes on |x| < inner
    std::vector<MomentRow> rows;  // one per delta, in input order
};

/// Evaluates the vanishing-mean, variance, weak-convergence, and zero-mass
/// conditions for each step size.
MomentConditionReport validate_moment_conditions(
    const LevyModel& model, std::span<const double> deltas,
    const DiscretizeOptions& opts = {}, const QuadratureConfig& cfg = {});

}  // namespace bsdelta
