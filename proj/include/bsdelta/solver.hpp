#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bsdelta/driver.hpp"
#include "bsdelta/walks.hpp"

namespace bsdelta {

/// Terminal datum F = H(X at the monitoring dates, W at the horizon).
/// `eval` receives the jump-walk values at every monitoring date in order
/// (the first entry is X_0 = 0, the last is X_T) plus the terminal Brownian
/// value (0 in pure-jump mode, ignored unless `uses_terminal_w`).
struct TerminalCondition {
    std::function<double(std::span<const double> x_monitored, double w_terminal)>
        eval;
    double lipschitz_K = 0.0;
    bool uses_terminal_w = false;
    std::string name = "custom";
};

/// Terminal condition reading only the final jump value X_T.
TerminalCondition terminal_of_xt(std::function<double(double)> h,
                                 std::string name = "custom");

struct SolveOptions {
    double fp_tol = 1e-12;   // one-step fixed-point tolerance
    int fp_max_iter = 100;   // cap before FixedPointStall
    std::size_t node_cap = 5'000'000;  // reachable-lattice guard
    int mixed_step_cap = 12;  // product-lattice mode is limited to small N
    bool fp_init_zero = false;  // start the fixed point at 0 instead of E[Y+]
};

/// Identity of a lattice node: integer multiples of the walk units, plus the
/// jump values recorded at interior monitoring dates already passed.
struct Key {
    std::int64_t x = 0;
    std::int64_t w = 0;
    std::vector<std::int64_t> rec;

    auto operator<=>(const Key&) const = default;
};

/// All nodes of one time slice, sorted by key; values are index-aligned.
struct Slice {
    std::vector<Key> keys;
    std::vector<double> y;
    std::vector<double> z;  // empty in pure-jump mode
};

/// Output of the backward induction: the value process on every reachable
/// node, with enough structure to recompute the martingale decomposition.
struct DiscreteSolution {
    WalkLaw walk;
    std::vector<Slice> slices;      // size steps + 1
    std::vector<int> monitor_steps; // interior recording steps, ascending
    double y0 = 0.0;
    double max_fp_residual = 0.0;
    std::size_t node_count = 0;
};

/// Backward induction for the one-step relations
///   Y_i = E_i[Y_{i+1}] + delta * f(t_i, Y_i, Z_i, Zt_i)   (implicit in Y_i)
///   Z_i = E_i[Y_{i+1} dW] / delta
///   Zt_i(x) = E_i[Y_{i+1} | dX = x] - E_i[Y_{i+1} | dX = 0].
/// Requires driver.lipschitz_K * delta < 1 and a lattice-aligned jump law.
DiscreteSolution backward_solve(const WalkLaw& walk, const Driver& driver,
                                const TerminalCondition& terminal,
                                const SolveOptions& opts = {});

/// One-step decomposition of a solved node: conditional mean, the Z / Zt
/// coefficients, and the residual-martingale increment per child (ordered
/// Brownian-atom-major, jump-atom-minor).
struct NodeDecomposition {
    double ey = 0.0;
    double z = 0.0;
    std::vector<double> zt;  // aligned with walk.x_law.support
    std::vector<double> dm;  // size = (#w atoms) * (#x atoms)
};
NodeDecomposition decompose_node(const DiscreteSolution& sol, int slice,
                                 std::size_t node);

/// Single-pass visitor over all interior nodes and their decompositions;
/// the cheap way to aggregate martingale or stability statistics.
void visit_decompositions(
    const DiscreteSolution& sol,
    const std::function<void(int slice, std::size_t node,
                             const NodeDecomposition& d)>& visit);

/// Child-position table of the reachable lattice: entry [j][node * A + a] is
/// the index in slice j+1 reached from `node` of slice j under joint atom a
/// (Brownian-atom-major, A = (#w atoms) * (#x atoms)).  `steps` entries.
std::vector<std::vector<std::size_t>> child_table(const DiscreteSolution& sol);

/// Worst-case martingale diagnostics over all nodes.
struct MartingaleDiagnostics {
    double max_abs_dm = 0.0;    // max |dM| over nodes and children
    double max_mean = 0.0;      // max |E_i dM|
    double max_w_orth = 0.0;    // max |E_i[dM dW]|
    double max_jump_orth = 0.0; // max over the k family of |E_i[dM (k - E k)]|
};

/// Default family of bounded test functions k with k(0) = 0 used for the
/// jump-orthogonality diagnostics.
std::span<const std::function<double(double)>> default_k_family();

MartingaleDiagnostics compute_m_increments(const DiscreteSolution& sol);

/// max over nodes/k of the orthogonality residuals against the Brownian
/// increment and the compensated k(dX) martingales.
double orthogonality_check(
    const DiscreteSolution& sol,
    std::span<const std::function<double(double)>> k_family =
        default_k_family());

/// Forward occupation probabilities aligned with each slice's keys.
std::vector<std::vector<double>> node_probabilities(const DiscreteSolution& sol);

/// Picard iteration for the same system, started at the identically-zero
/// triple: sweep p+1 propagates E[Y_{i+1}] of the new iterate plus the driver
/// evaluated on iterate p.  Geometric contraction under K * delta < 1.
struct PicardResult {
    std::vector<double> distances;    // sup-norm gap per sweep
    std::vector<double> y0_per_iter;  // root value per sweep
    int iterations = 0;
    DiscreteSolution solution;        // final iterate (Z tables recomputed)
};
PicardResult picard_solve(const WalkLaw& walk, const Driver& driver,
                          const TerminalCondition& terminal, int max_iters,
                          double tol, const SolveOptions& opts = {});

/// One-step representation defect: max over atoms of
/// |F(x) - (E F + Zt(x) - E Zt(dX))| for F given by values on the support.
double representation_check(const IncrementLaw& law,
                            std::span<const double> terminal_values);

namespace detail {

/// Flattened per-solve view of the one-step atom structure.
struct StepLaw {
    std::vector<double> wq;     // Brownian probs ({1} in pure-jump mode)
    std::vector<double> wdisp;  // Brownian displacements ({0} in pure mode)
    std::vector<double> xp;     // jump probs
    std::size_t x_zero = 0;     // index of the zero jump atom
    double delta = 0.0;
    bool mixed = false;
};
StepLaw make_step_law(const WalkLaw& walk);

struct StepOut {
    double y = 0.0;
    double z = 0.0;
    double ey = 0.0;
    double fp_diff = 0.0;  // last fixed-point update, a residual bound
};

/// The single shared implementation of the one-step solve; `child_y(wi, xi)`
/// returns the next-slice value under Brownian atom wi and jump atom xi.
/// Both the lattice solver and the exhaustive tree oracle must call this so
/// their arithmetic agrees bit for bit.
StepOut one_step(const StepLaw& sl, const Driver& driver, double t,
                 const std::function<double(std::size_t, std::size_t)>& child_y,
                 std::vector<double>& zt_buf, const SolveOptions& opts);

/// Terminal evaluation shared by the solver and the tree oracle.
double terminal_value(const WalkLaw& walk, const TerminalCondition& terminal,
                      const Key& key);

}  // namespace detail

}  // namespace bsdelta
