#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bsdelta/config.hpp"
#include "bsdelta/report.hpp"
#include "bsdelta/solver.hpp"

namespace bsdelta {

/// Mesh-refinement study over cfg.steps_list: every refinement is solved,
/// compared against the configured oracle when one exists, and judged on the
/// final error plus the decay of the last three refinements.
ConvergenceReport run_convergence(const ExperimentConfig& cfg);

/// A-priori stability study on pure-jump instances: cfg.n_pairs problem
/// pairs (pair 0 identical, pair 1 a terminal translation, the rest random
/// bounded perturbations) solved at every N in cfg.steps_list; each row
/// carries the exact ratio of the energy estimate plus the lower-bound
/// lemma quantities.
StabilityReport run_stability(const ExperimentConfig& cfg);

/// Construction / moment / martingale / lift / fixed-point diagnostics of
/// the configured model, one PASS/FAIL/SKIP row per named check.
ValidationReport run_validation(const ExperimentConfig& cfg);

/// One instance assembled from a config at a specific refinement.
struct SolvedInstance {
    LawBundle bundle;
    WalkLaw walk;
    DiscreteSolution solution;
    double seconds = 0.0;
};
SolvedInstance solve_instance(const ExperimentConfig& cfg, int steps);

/// Pinned JSON description of one discretized increment law:
/// {h, h_minus, h_plus, delta, sigma2, support[], probs[], edges_pos[],
/// edges_neg[]}.  edges_pos are the lower edges of the positive bins
/// ascending (the last one is the truncation radius, opening the overflow
/// bin); edges_neg mirror them on the negative side, starting at -h_minus.
std::string law_json(const LawBundle& bundle);

/// Per-slice summary of a solved instance (aggregates only; node tables are
/// not serialized).
std::string solution_summary_csv(const DiscreteSolution& sol, double seconds,
                                 bool include_timings);
std::string solution_json(const DiscreteSolution& sol, double seconds,
                          bool include_timings);

/// The two problems of one stability pair, instantiated on a concrete jump
/// law (the random coefficients depend only on (seed, pair_id), so the same
/// pair refines consistently across N).
struct StabilityPair {
    Driver driver0;
    Driver driver1;
    TerminalCondition terminal0;
    TerminalCondition terminal1;
};
StabilityPair make_stability_pair(int pair_id, const IncrementLaw& law,
                                  std::uint64_t seed);

/// Exact E[max_j |v_j|^2] of per-node values over the lattice paths, via one
/// absorption sweep per distinct exceedance level.  `values` is aligned with
/// sol.slices.
double expected_running_max_sq(const DiscreteSolution& sol,
                               const std::vector<std::vector<double>>& values);

}  // namespace bsdelta
