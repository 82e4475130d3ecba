#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bsdelta/levy.hpp"
#include "bsdelta/oracles.hpp"
#include "bsdelta/qlift.hpp"

namespace bsdelta {

/// Flat experiment description parsed from the INI-style config format:
/// `[section]` headers, `key = value` lines, `#` comments.  Unknown sections
/// or keys are hard errors with line numbers; values are type-checked.
struct ExperimentConfig {
    // [model]
    std::string model_name = "compound_poisson_normal";
    double lambda = 1.0;
    double sigma = 1.0;
    double p = 0.5;
    double eta1 = 1.0;
    double eta2 = 1.0;
    double C = 1.0;
    double M = 1.0;

    // [grid]
    double horizon = 1.0;
    std::vector<int> steps_list = {8};
    std::vector<double> monitoring;  // empty -> {0, horizon}

    // [driver]  f = c + a y + b z + jump integral (rho scaled)
    std::string driver_name = "zero";
    double driver_a = 0.0;
    double driver_b = 0.0;
    double driver_c = 0.0;
    double rho_scale = 1.0;

    // [terminal]
    std::string terminal_name = "identity";
    double strike = 0.0;
    double shift = 0.0;

    // [discretization]
    int kappa = 8;
    double bin_width_factor = 1.0;
    bool widen_for_lift = true;
    std::string brownian = "none";  // none | rademacher | trinomial

    // [oracle]
    std::string oracle_method = "auto";  // auto | closed_form | monte_carlo | none
    std::uint64_t n_samples = 1'000'000;

    // [stability]
    int n_pairs = 20;

    // [tolerances]
    double quad_tol = 1e-10;
    double fp_tol = 1e-12;
    double picard_tol = 1e-10;
    int picard_max = 50;

    // [output]
    std::string out_dir = ".";

    std::uint64_t seed = 20240801;

    bool operator==(const ExperimentConfig&) const = default;

    /// Canonical flattened section.key -> value map echoed into reports.
    std::map<std::string, std::string> echo() const;
};

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin = "<memory>");
ExperimentConfig parse_config_file(const std::string& path);

/// Builders for the configured pieces; all throw ConfigError on bad names.
LevyModel build_model(const ExperimentConfig& cfg);
DriverSpec build_driver_spec(const ExperimentConfig& cfg);
TerminalFunctional build_terminal_functional(const ExperimentConfig& cfg);

}  // namespace bsdelta
