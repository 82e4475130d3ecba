#include "bsdelta/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "bsdelta/errors.hpp"

namespace bsdelta {

TerminalCondition terminal_of_xt(std::function<double(double)> h,
                                 std::string name) {
    TerminalCondition t;
    t.eval = [h = std::move(h)](std::span<const double> xs, double) {
        return h(xs.back());
    };
    t.lipschitz_K = 1.0;
    t.uses_terminal_w = false;
    t.name = std::move(name);
    return t;
}

namespace detail {

StepLaw make_step_law(const WalkLaw& walk) {
    StepLaw sl;
    sl.delta = walk.grid.delta();
    sl.mixed = walk.mixed();
    if (sl.mixed) {
        sl.wq = walk.w_law->probs;
        sl.wdisp = walk.w_law->support;
    } else {
        sl.wq = {1.0};
        sl.wdisp = {0.0};
    }
    sl.xp = walk.x_law.probs;
    sl.x_zero = walk.x_law.zero_pos();
    return sl;
}

/// Conditional means shared by the solver step and the diagnostics:
/// fills zt_buf with E[Y+ | dX = atom] and returns (E[Y+], raw Z numerator).
static std::pair<double, double> accumulate_node(
    const StepLaw& sl,
    const std::function<double(std::size_t, std::size_t)>& child_y,
    std::vector<double>& zt_buf) {
    const std::size_t nw = sl.wq.size();
    const std::size_t nx = sl.xp.size();
    zt_buf.assign(nx, 0.0);
    double ey = 0.0;
    double zraw = 0.0;
    for (std::size_t xi = 0; xi < nx; ++xi) {
        double cond = 0.0;
        for (std::size_t wi = 0; wi < nw; ++wi) {
            const double v = child_y(wi, xi);
            cond += sl.wq[wi] * v;
            if (sl.mixed) zraw += sl.wq[wi] * sl.xp[xi] * v * sl.wdisp[wi];
        }
        zt_buf[xi] = cond;
        ey += sl.xp[xi] * cond;
    }
    return {ey, zraw};
}

StepOut one_step(const StepLaw& sl, const Driver& driver, double t,
                 const std::function<double(std::size_t, std::size_t)>& child_y,
                 std::vector<double>& zt_buf, const SolveOptions& opts) {
    const auto [ey, zraw] = accumulate_node(sl, child_y, zt_buf);
    const double cond0 = zt_buf[sl.x_zero];
    for (double& v : zt_buf) v -= cond0;
    zt_buf[sl.x_zero] = 0.0;
    const double z = sl.mixed ? zraw / sl.delta : 0.0;

    StepOut out;
    out.ey = ey;
    out.z = z;
    if (!driver.depends_y) {
        out.y = ey + sl.delta * driver.eval(t, ey, z, zt_buf);
        out.fp_diff = 0.0;
        return out;
    }
    double y = opts.fp_init_zero ? 0.0 : ey;
    for (int it = 0; it < opts.fp_max_iter; ++it) {
        const double ynext = ey + sl.delta * driver.eval(t, y, z, zt_buf);
        const double diff = std::abs(ynext - y);
        y = ynext;
        if (diff <= opts.fp_tol) {
            out.y = y;
            out.fp_diff = diff;
            return out;
        }
    }
    throw FixedPointStall(
        "one_step: implicit fixed point did not settle within the iteration "
        "cap");
}

double terminal_value(const WalkLaw& walk, const TerminalCondition& terminal,
                      const Key& key) {
    const double xu = walk.x_law.unit;
    std::vector<double> monitored;
    monitored.reserve(key.rec.size() + 2);
    monitored.push_back(0.0);
    for (const std::int64_t n : key.rec)
        monitored.push_back(static_cast<double>(n) * xu);
    monitored.push_back(static_cast<double>(key.x) * xu);
    const double wt =
        walk.mixed() ? static_cast<double>(key.w) * walk.w_law->unit : 0.0;
    return terminal.eval(monitored, wt);
}

}  // namespace detail

namespace {

using detail::StepLaw;

/// Interior monitoring steps: time indices 0 < m < steps whose date is
/// monitored, i.e. the steps after which the current jump value must be
/// remembered in the node key.
std::vector<int> interior_monitor_steps(const TemporalGrid& grid) {
    std::vector<int> steps;
    const double delta = grid.delta();
    for (const double s : grid.monitoring_dates) {
        const int m = static_cast<int>(std::round(s / delta));
        if (m > 0 && m < grid.steps) steps.push_back(m);
    }
    std::sort(steps.begin(), steps.end());
    return steps;
}

bool is_monitor_step(const std::vector<int>& steps, int i) {
    return std::binary_search(steps.begin(), steps.end(), i);
}

/// Merges the sorted child streams (one per joint atom) of a sorted parent
/// slice into the sorted, deduplicated key list of the next slice.
std::vector<Key> advance_keys(const std::vector<Key>& parents, bool record,
                              const std::vector<std::int64_t>& xoff,
                              const std::vector<std::int64_t>& woff) {
    std::vector<Key> base;
    base.reserve(parents.size());
    if (record) {
        for (const Key& p : parents) {
            Key k = p;
            k.rec.push_back(p.x);
            base.push_back(std::move(k));
        }
    } else {
        base = parents;
    }
    std::vector<Key> acc;
    std::vector<Key> merged;
    for (const std::int64_t wo : woff) {
        for (const std::int64_t xo : xoff) {
            merged.clear();
            merged.reserve(acc.size() + base.size());
            std::size_t ia = 0;
            std::size_t ib = 0;
            Key candidate;
            while (ia < acc.size() || ib < base.size()) {
                bool take_b;
                if (ia == acc.size())
                    take_b = true;
                else if (ib == base.size())
                    take_b = false;
                else {
                    const Key& a = acc[ia];
                    const Key& b = base[ib];
                    const std::int64_t bx = b.x + xo;
                    const std::int64_t bw = b.w + wo;
                    take_b = std::tie(bx, bw, b.rec) < std::tie(a.x, a.w, a.rec);
                }
                if (take_b) {
                    candidate = base[ib];
                    candidate.x += xo;
                    candidate.w += wo;
                    ++ib;
                } else {
                    candidate = std::move(acc[ia]);
                    ++ia;
                }
                if (merged.empty() || merged.back() != candidate)
                    merged.push_back(std::move(candidate));
            }
            acc.swap(merged);
        }
    }
    return acc;
}

/// Forward reachability pass shared by the solver and the Picard iteration.
std::vector<Slice> forward_slices(const WalkLaw& walk,
                                  const std::vector<int>& monitor_steps,
                                  const SolveOptions& opts,
                                  std::size_t* node_count) {
    const IncrementLaw& xl = walk.x_law;
    if (!(xl.unit > 0.0) || xl.offsets.size() != xl.support.size())
        throw SupportMismatch(
            "backward_solve: jump law must be lattice-aligned; run "
            "snap_to_lattice first");
    std::vector<std::int64_t> woff = {0};
    if (walk.mixed()) {
        if (!(walk.w_law->unit > 0.0))
            throw SupportMismatch("backward_solve: Brownian law lacks a lattice");
        woff = walk.w_law->offsets;
    }
    const int n = walk.grid.steps;
    std::vector<Slice> slices(static_cast<std::size_t>(n) + 1);
    slices[0].keys = {Key{}};
    *node_count = 1;
    for (int i = 0; i < n; ++i) {
        slices[i + 1].keys = advance_keys(
            slices[i].keys, is_monitor_step(monitor_steps, i), xl.offsets, woff);
        *node_count += slices[i + 1].keys.size();
        if (*node_count > opts.node_cap)
            throw StateExplosion(
                "backward_solve: reachable lattice exceeded the node cap");
    }
    return slices;
}

/// Child index lookup table for one node: indices into the next slice,
/// Brownian-atom-major.  `probe` is reused storage.
void child_indices(const Slice& next, const Key& parent, bool record,
                   const std::vector<std::int64_t>& xoff,
                   const std::vector<std::int64_t>& woff, Key& probe,
                   std::vector<std::size_t>& out) {
    probe.rec = parent.rec;
    if (record) probe.rec.push_back(parent.x);
    out.clear();
    out.reserve(woff.size() * xoff.size());
    for (const std::int64_t wo : woff) {
        for (const std::int64_t xo : xoff) {
            probe.x = parent.x + xo;
            probe.w = parent.w + wo;
            const auto it =
                std::lower_bound(next.keys.begin(), next.keys.end(), probe);
            if (it == next.keys.end() || *it != probe)
                throw StateExplosion(
                    "backward_solve: internal error, child key missing");
            out.push_back(static_cast<std::size_t>(it - next.keys.begin()));
        }
    }
}

struct LatticeOffsets {
    std::vector<std::int64_t> xoff;
    std::vector<std::int64_t> woff;
};

LatticeOffsets lattice_offsets(const WalkLaw& walk) {
    LatticeOffsets lo;
    lo.xoff = walk.x_law.offsets;
    lo.woff = walk.mixed() ? walk.w_law->offsets
                           : std::vector<std::int64_t>{0};
    return lo;
}

void validate_solver_inputs(const WalkLaw& walk, const Driver& driver,
                            const SolveOptions& opts) {
    const double delta = walk.grid.delta();
    if (!(driver.lipschitz_K * delta < 1.0)) {
        std::ostringstream msg;
        msg << "backward_solve: K * delta = " << driver.lipschitz_K * delta
            << " >= 1; the implicit step is not a contraction (N = "
            << walk.grid.steps << ")";
        throw ContractionViolation(msg.str());
    }
    if (walk.mixed() && walk.grid.steps > opts.mixed_step_cap) {
        std::ostringstream msg;
        msg << "backward_solve: mixed mode supports at most "
            << opts.mixed_step_cap << " steps, got " << walk.grid.steps;
        throw StateExplosion(msg.str());
    }
}

}  // namespace

DiscreteSolution backward_solve(const WalkLaw& walk, const Driver& driver,
                                const TerminalCondition& terminal,
                                const SolveOptions& opts) {
    validate_solver_inputs(walk, driver, opts);
    DiscreteSolution sol;
    sol.walk = walk;
    sol.monitor_steps = interior_monitor_steps(walk.grid);
    sol.slices = forward_slices(walk, sol.monitor_steps, opts, &sol.node_count);

    const StepLaw sl = detail::make_step_law(walk);
    const LatticeOffsets lo = lattice_offsets(walk);
    const int n = walk.grid.steps;
    const double delta = walk.grid.delta();
    const std::size_t nx = sl.xp.size();

    Slice& last = sol.slices[n];
    last.y.resize(last.keys.size());
    for (std::size_t k = 0; k < last.keys.size(); ++k)
        last.y[k] = detail::terminal_value(walk, terminal, last.keys[k]);

    std::vector<double> zt_buf;
    std::vector<double> childv;
    std::vector<std::size_t> cidx;
    Key probe;
    for (int i = n - 1; i >= 0; --i) {
        Slice& cur = sol.slices[i];
        const Slice& next = sol.slices[i + 1];
        const bool record = is_monitor_step(sol.monitor_steps, i);
        const double t = i * delta;
        cur.y.resize(cur.keys.size());
        if (sl.mixed) cur.z.resize(cur.keys.size());
        for (std::size_t k = 0; k < cur.keys.size(); ++k) {
            child_indices(next, cur.keys[k], record, lo.xoff, lo.woff, probe,
                          cidx);
            childv.resize(cidx.size());
            for (std::size_t c = 0; c < cidx.size(); ++c)
                childv[c] = next.y[cidx[c]];
            const auto child_y = [&](std::size_t wi, std::size_t xi) {
                return childv[wi * nx + xi];
            };
            const detail::StepOut out =
                detail::one_step(sl, driver, t, child_y, zt_buf, opts);
            cur.y[k] = out.y;
            if (sl.mixed) cur.z[k] = out.z;
            sol.max_fp_residual = std::max(sol.max_fp_residual, out.fp_diff);
        }
    }
    sol.y0 = sol.slices[0].y[0];
    return sol;
}

namespace {

/// Shared per-node recomputation for the diagnostics entry points.
/// Calls `visit(slice, node, decomposition, childv)` for every interior node.
void for_each_node(
    const DiscreteSolution& sol,
    const std::function<void(int, std::size_t, const NodeDecomposition&,
                             const std::vector<double>&)>& visit) {
    const StepLaw sl = detail::make_step_law(sol.walk);
    const LatticeOffsets lo = lattice_offsets(sol.walk);
    const std::size_t nx = sl.xp.size();
    const std::size_t nw = sl.wq.size();
    std::vector<double> childv;
    std::vector<std::size_t> cidx;
    Key probe;
    NodeDecomposition d;
    for (int i = 0; i < sol.walk.grid.steps; ++i) {
        const Slice& cur = sol.slices[i];
        const Slice& next = sol.slices[i + 1];
        const bool record = is_monitor_step(sol.monitor_steps, i);
        for (std::size_t k = 0; k < cur.keys.size(); ++k) {
            child_indices(next, cur.keys[k], record, lo.xoff, lo.woff, probe,
                          cidx);
            childv.resize(cidx.size());
            for (std::size_t c = 0; c < cidx.size(); ++c)
                childv[c] = next.y[cidx[c]];
            const auto child_y = [&](std::size_t wi, std::size_t xi) {
                return childv[wi * nx + xi];
            };
            const auto [ey, zraw] = detail::accumulate_node(sl, child_y, d.zt);
            const double cond0 = d.zt[sl.x_zero];
            for (double& v : d.zt) v -= cond0;
            d.zt[sl.x_zero] = 0.0;
            d.ey = ey;
            d.z = sl.mixed ? zraw / sl.delta : 0.0;
            double ejump = 0.0;
            for (std::size_t xi = 0; xi < nx; ++xi)
                ejump += sl.xp[xi] * d.zt[xi];
            d.dm.assign(nw * nx, 0.0);
            for (std::size_t wi = 0; wi < nw; ++wi)
                for (std::size_t xi = 0; xi < nx; ++xi)
                    d.dm[wi * nx + xi] = childv[wi * nx + xi] - ey -
                                         d.z * sl.wdisp[wi] -
                                         (d.zt[xi] - ejump);
            visit(i, k, d, childv);
        }
    }
}

}  // namespace

void visit_decompositions(
    const DiscreteSolution& sol,
    const std::function<void(int, std::size_t, const NodeDecomposition&)>&
        visit) {
    for_each_node(sol, [&](int i, std::size_t k, const NodeDecomposition& d,
                           const std::vector<double>&) { visit(i, k, d); });
}

std::vector<std::vector<std::size_t>> child_table(const DiscreteSolution& sol) {
    const LatticeOffsets lo = lattice_offsets(sol.walk);
    const std::size_t arity = lo.woff.size() * lo.xoff.size();
    std::vector<std::vector<std::size_t>> table(sol.walk.grid.steps);
    std::vector<std::size_t> cidx;
    Key probe;
    for (int i = 0; i < sol.walk.grid.steps; ++i) {
        const Slice& cur = sol.slices[i];
        const Slice& next = sol.slices[i + 1];
        const bool record = is_monitor_step(sol.monitor_steps, i);
        table[i].resize(cur.keys.size() * arity);
        for (std::size_t k = 0; k < cur.keys.size(); ++k) {
            child_indices(next, cur.keys[k], record, lo.xoff, lo.woff, probe,
                          cidx);
            std::copy(cidx.begin(), cidx.end(), table[i].begin() + k * arity);
        }
    }
    return table;
}

NodeDecomposition decompose_node(const DiscreteSolution& sol, int slice,
                                 std::size_t node) {
    NodeDecomposition result;
    bool found = false;
    for_each_node(sol, [&](int i, std::size_t k, const NodeDecomposition& d,
                           const std::vector<double>&) {
        if (i == slice && k == node && !found) {
            result = d;
            found = true;
        }
    });
    if (!found)
        throw StateExplosion("decompose_node: no such node");
    return result;
}

std::span<const std::function<double(double)>> default_k_family() {
    static const std::vector<std::function<double(double)>> family = {
        [](double x) { return x; },
        [](double x) { return x * x; },
        [](double x) { return x != 0.0 ? 1.0 : 0.0; },
        [](double x) { return std::sin(x); },
    };
    return family;
}

MartingaleDiagnostics compute_m_increments(const DiscreteSolution& sol) {
    const StepLaw sl = detail::make_step_law(sol.walk);
    const std::size_t nx = sl.xp.size();
    const std::size_t nw = sl.wq.size();
    const auto family = default_k_family();
    // E[k(dX)] per family member (constant across nodes).
    std::vector<double> ek(family.size(), 0.0);
    for (std::size_t f = 0; f < family.size(); ++f)
        for (std::size_t xi = 0; xi < nx; ++xi)
            ek[f] += sl.xp[xi] * family[f](sol.walk.x_law.support[xi]);

    MartingaleDiagnostics diag;
    for_each_node(sol, [&](int, std::size_t, const NodeDecomposition& d,
                           const std::vector<double>&) {
        double mean = 0.0;
        double worth = 0.0;
        for (std::size_t wi = 0; wi < nw; ++wi)
            for (std::size_t xi = 0; xi < nx; ++xi) {
                const double qp = sl.wq[wi] * sl.xp[xi];
                const double dm = d.dm[wi * nx + xi];
                diag.max_abs_dm = std::max(diag.max_abs_dm, std::abs(dm));
                mean += qp * dm;
                worth += qp * dm * sl.wdisp[wi];
            }
        diag.max_mean = std::max(diag.max_mean, std::abs(mean));
        diag.max_w_orth = std::max(diag.max_w_orth, std::abs(worth));
        for (std::size_t f = 0; f < family.size(); ++f) {
            double korth = 0.0;
            for (std::size_t wi = 0; wi < nw; ++wi)
                for (std::size_t xi = 0; xi < nx; ++xi) {
                    const double qp = sl.wq[wi] * sl.xp[xi];
                    const double kx = family[f](sol.walk.x_law.support[xi]);
                    korth += qp * d.dm[wi * nx + xi] * (kx - ek[f]);
                }
            diag.max_jump_orth = std::max(diag.max_jump_orth, std::abs(korth));
        }
    });
    return diag;
}

double orthogonality_check(
    const DiscreteSolution& sol,
    std::span<const std::function<double(double)>> k_family) {
    const StepLaw sl = detail::make_step_law(sol.walk);
    const std::size_t nx = sl.xp.size();
    const std::size_t nw = sl.wq.size();
    std::vector<double> ek(k_family.size(), 0.0);
    for (std::size_t f = 0; f < k_family.size(); ++f)
        for (std::size_t xi = 0; xi < nx; ++xi)
            ek[f] += sl.xp[xi] * k_family[f](sol.walk.x_law.support[xi]);
    double worst = 0.0;
    for_each_node(sol, [&](int, std::size_t, const NodeDecomposition& d,
                           const std::vector<double>&) {
        double worth = 0.0;
        double mean = 0.0;
        for (std::size_t wi = 0; wi < nw; ++wi)
            for (std::size_t xi = 0; xi < nx; ++xi) {
                const double qp = sl.wq[wi] * sl.xp[xi];
                mean += qp * d.dm[wi * nx + xi];
                worth += qp * d.dm[wi * nx + xi] * sl.wdisp[wi];
            }
        worst = std::max({worst, std::abs(mean), std::abs(worth)});
        for (std::size_t f = 0; f < k_family.size(); ++f) {
            double korth = 0.0;
            for (std::size_t wi = 0; wi < nw; ++wi)
                for (std::size_t xi = 0; xi < nx; ++xi) {
                    const double qp = sl.wq[wi] * sl.xp[xi];
                    const double kx = k_family[f](sol.walk.x_law.support[xi]);
                    korth += qp * d.dm[wi * nx + xi] * (kx - ek[f]);
                }
            worst = std::max(worst, std::abs(korth));
        }
    });
    return worst;
}

std::vector<std::vector<double>> node_probabilities(
    const DiscreteSolution& sol) {
    const StepLaw sl = detail::make_step_law(sol.walk);
    const LatticeOffsets lo = lattice_offsets(sol.walk);
    const std::size_t nx = sl.xp.size();
    std::vector<std::vector<double>> probs(sol.slices.size());
    probs[0] = {1.0};
    std::vector<std::size_t> cidx;
    Key probe;
    for (int i = 0; i < sol.walk.grid.steps; ++i) {
        const Slice& cur = sol.slices[i];
        const Slice& next = sol.slices[i + 1];
        const bool record = is_monitor_step(sol.monitor_steps, i);
        probs[i + 1].assign(next.keys.size(), 0.0);
        for (std::size_t k = 0; k < cur.keys.size(); ++k) {
            child_indices(next, cur.keys[k], record, lo.xoff, lo.woff, probe,
                          cidx);
            for (std::size_t wi = 0; wi < sl.wq.size(); ++wi)
                for (std::size_t xi = 0; xi < nx; ++xi)
                    probs[i + 1][cidx[wi * nx + xi]] +=
                        probs[i][k] * sl.wq[wi] * sl.xp[xi];
        }
    }
    return probs;
}

PicardResult picard_solve(const WalkLaw& walk, const Driver& driver,
                          const TerminalCondition& terminal, int max_iters,
                          double tol, const SolveOptions& opts) {
    validate_solver_inputs(walk, driver, opts);
    PicardResult res;
    res.solution.walk = walk;
    res.solution.monitor_steps = interior_monitor_steps(walk.grid);
    res.solution.slices = forward_slices(walk, res.solution.monitor_steps, opts,
                                         &res.solution.node_count);
    std::vector<Slice>& slices = res.solution.slices;

    const StepLaw sl = detail::make_step_law(walk);
    const LatticeOffsets lo = lattice_offsets(walk);
    const int n = walk.grid.steps;
    const double delta = walk.grid.delta();
    const std::size_t nx = sl.xp.size();

    // Terminal values are shared by every sweep.
    std::vector<double> terminal_y(slices[n].keys.size());
    for (std::size_t k = 0; k < terminal_y.size(); ++k)
        terminal_y[k] = detail::terminal_value(walk, terminal, slices[n].keys[k]);

    // Iterate p (prev) and p+1 (next); iterate 0 is identically zero, which
    // also zeroes the derived Z / Zt arguments.
    std::vector<std::vector<double>> prev(n + 1), next(n + 1);
    for (int i = 0; i <= n; ++i) prev[i].assign(slices[i].keys.size(), 0.0);

    std::vector<double> zt_buf;
    std::vector<double> childv_prev, childv_next;
    std::vector<std::size_t> cidx;
    Key probe;
    bool converged = false;
    for (int sweep = 0; sweep < max_iters && !converged; ++sweep) {
        next[n] = terminal_y;
        double dist = 0.0;
        for (std::size_t k = 0; k < prev[n].size(); ++k)
            dist = std::max(dist, std::abs(next[n][k] - prev[n][k]));
        for (int i = n - 1; i >= 0; --i) {
            next[i].resize(slices[i].keys.size());
            const bool record = is_monitor_step(res.solution.monitor_steps, i);
            const double t = i * delta;
            for (std::size_t k = 0; k < slices[i].keys.size(); ++k) {
                child_indices(slices[i + 1], slices[i].keys[k], record, lo.xoff,
                              lo.woff, probe, cidx);
                childv_prev.resize(cidx.size());
                childv_next.resize(cidx.size());
                for (std::size_t c = 0; c < cidx.size(); ++c) {
                    childv_prev[c] = prev[i + 1][cidx[c]];
                    childv_next[c] = next[i + 1][cidx[c]];
                }
                // Driver arguments come from iterate p...
                const auto child_prev = [&](std::size_t wi, std::size_t xi) {
                    return childv_prev[wi * nx + xi];
                };
                const auto [ey_p, zraw_p] =
                    detail::accumulate_node(sl, child_prev, zt_buf);
                (void)ey_p;
                const double cond0 = zt_buf[sl.x_zero];
                for (double& v : zt_buf) v -= cond0;
                zt_buf[sl.x_zero] = 0.0;
                const double z_p = sl.mixed ? zraw_p / sl.delta : 0.0;
                // ... while the conditional expectation uses iterate p+1.
                double ey_next = 0.0;
                for (std::size_t wi = 0; wi < sl.wq.size(); ++wi)
                    for (std::size_t xi = 0; xi < nx; ++xi)
                        ey_next += sl.wq[wi] * sl.xp[xi] * childv_next[wi * nx + xi];
                const double f =
                    driver.eval(t, prev[i][k], z_p, zt_buf);
                next[i][k] = ey_next + delta * f;
                dist = std::max(dist, std::abs(next[i][k] - prev[i][k]));
            }
        }
        res.distances.push_back(dist);
        res.y0_per_iter.push_back(next[0][0]);
        prev.swap(next);
        res.iterations = sweep + 1;
        if (dist <= tol) converged = true;
    }
    if (!converged)
        throw NonConvergence(
            "picard_solve: iteration did not reach tolerance within the sweep "
            "budget");

    // Publish the final iterate with recomputed Z tables and the implicit
    // residual it leaves in the one-step relation.
    for (int i = 0; i <= n; ++i) {
        slices[i].y = prev[i];
        if (sl.mixed && i < n) slices[i].z.assign(slices[i].keys.size(), 0.0);
    }
    double resid = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        const bool record = is_monitor_step(res.solution.monitor_steps, i);
        const double t = i * delta;
        for (std::size_t k = 0; k < slices[i].keys.size(); ++k) {
            child_indices(slices[i + 1], slices[i].keys[k], record, lo.xoff,
                          lo.woff, probe, cidx);
            childv_next.resize(cidx.size());
            for (std::size_t c = 0; c < cidx.size(); ++c)
                childv_next[c] = slices[i + 1].y[cidx[c]];
            const auto child_y = [&](std::size_t wi, std::size_t xi) {
                return childv_next[wi * nx + xi];
            };
            const auto [ey, zraw] = detail::accumulate_node(sl, child_y, zt_buf);
            const double cond0 = zt_buf[sl.x_zero];
            for (double& v : zt_buf) v -= cond0;
            zt_buf[sl.x_zero] = 0.0;
            const double z = sl.mixed ? zraw / sl.delta : 0.0;
            if (sl.mixed) slices[i].z[k] = z;
            const double f = driver.eval(t, slices[i].y[k], z, zt_buf);
            resid = std::max(resid,
                             std::abs(slices[i].y[k] - (ey + delta * f)));
        }
    }
    res.solution.max_fp_residual = resid;
    res.solution.y0 = slices[0].y[0];
    return res;
}

double representation_check(const IncrementLaw& law,
                            std::span<const double> terminal_values) {
    if (terminal_values.size() != law.support.size())
        throw SupportMismatch(
            "representation_check: table size does not match the support");
    const std::size_t zero = law.zero_pos();
    double ef = 0.0;
    for (std::size_t i = 0; i < law.probs.size(); ++i)
        ef += law.probs[i] * terminal_values[i];
    const double f0 = terminal_values[zero];
    double ezt = 0.0;
    for (std::size_t i = 0; i < law.probs.size(); ++i)
        ezt += law.probs[i] * (terminal_values[i] - f0);
    double worst = 0.0;
    for (std::size_t i = 0; i < law.probs.size(); ++i) {
        const double zt = terminal_values[i] - f0;
        worst = std::max(worst,
                         std::abs(terminal_values[i] - (ef + zt - ezt)));
    }
    return worst;
}

}  // namespace bsdelta
