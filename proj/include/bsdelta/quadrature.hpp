#pragma once

#include <functional>

namespace bsdelta {

/// Accuracy knobs for the adaptive integrator.  `tol` is an absolute target
/// for each top-level integral; `max_panels` bounds the number of interval
/// subdivisions before we give up.
struct QuadratureConfig {
    double tol = 1e-10;
    int max_panels = 4000;
};

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over the finite interval
/// [a, b].  Panels are split where the embedded error estimate is largest
/// until the summed estimate falls below `cfg.tol`.  Deterministic: the same
/// inputs always produce the same result.  Throws QuadratureDivergence if the
/// panel budget is exhausted first.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg = {});

}  // namespace bsdelta
