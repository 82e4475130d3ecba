#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bsdelta/discretize.hpp"

namespace bsdelta {

/// Two-point (+-sqrt(delta)) or three-point (0, +-sqrt(3 delta / 2)) walk
/// increment for the Brownian component.  Both match mean 0 / variance delta
/// exactly and keep P(dW = 0) away from 1.
enum class BrownianVariant { rademacher, trinomial };

/// Discrete law of one Brownian-walk increment, lattice-aligned with unit
/// equal to the step magnitude.
IncrementLaw brownian_increment_law(double delta, BrownianVariant variant);

/// max(|E dW|, |E dW^2 - delta|) for a candidate Brownian increment law.
double check_brownian_condition(const IncrementLaw& law);

/// Joint description of the driving random walk: a jump increment law and
/// (in mixed mode) an independent Brownian increment law on a shared grid.
struct WalkLaw {
    TemporalGrid grid;
    IncrementLaw x_law;
    std::optional<IncrementLaw> w_law;

    bool mixed() const { return w_law.has_value(); }
};

/// Simulated trajectories, row-major: path r, time index j lives at
/// [r * (steps + 1) + j].  Column j holds the cumulative value at t_j.
struct PathBatch {
    int n_paths = 0;
    int steps = 0;
    std::vector<double> x;  // jump component, always present
    std::vector<double> w;  // Brownian component, empty in pure-jump mode

    /// CSV matrix (rows = paths, columns = t_0..t_N) of one component.
    void write_csv(std::ostream& os, char component) const;
    /// Raw little-endian doubles, same ordering as the CSV.
    void write_binary(std::ostream& os, char component) const;
};

/// Samples `n_paths` independent trajectories.  Deterministic in (law, seed):
/// each path consumes its own seeded generator, so the batch never depends on
/// scheduling or batch size.
PathBatch sample_paths(const WalkLaw& walk, int n_paths, std::uint64_t seed);

}  // namespace bsdelta
