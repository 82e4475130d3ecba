#pragma once

#include <functional>
#include <span>
#include <string>

namespace bsdelta {

/// Discrete driver as consumed by the backward solver.  `ztable[i]` is the
/// jump coefficient evaluated at the i-th atom of the walk's jump support
/// (so ztable[zero_pos] is always 0).  `lipschitz_K` must dominate the
/// Lipschitz constant in (y, z, ztable) with the jump part measured in the
/// discrete L2(nu_pi) norm; the one-step fixed point needs K * delta < 1.
struct Driver {
    std::function<double(double t, double y, double z,
                         std::span<const double> ztable)>
        eval;
    double lipschitz_K = 0.0;
    bool depends_y = false;
    bool depends_z = false;
    bool depends_zt = false;
    std::string name = "custom";
};

/// Driver that ignores all arguments.
inline Driver zero_driver() {
    Driver d;
    d.eval = [](double, double, double, std::span<const double>) { return 0.0; };
    d.lipschitz_K = 0.0;
    d.name = "zero";
    return d;
}

/// f = a * y + c.
inline Driver linear_y_driver(double a, double c) {
    Driver d;
    d.eval = [a, c](double, double y, double, std::span<const double>) {
        return a * y + c;
    };
    d.lipschitz_K = std::abs(a);
    d.depends_y = (a != 0.0);
    d.name = "linear_y";
    return d;
}

/// f = c.
inline Driver constant_driver(double c) { return linear_y_driver(0.0, c); }

}  // namespace bsdelta
