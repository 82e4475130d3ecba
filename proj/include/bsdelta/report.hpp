#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bsdelta {

/// One refinement level of a convergence study.
struct ConvergenceRow {
    int steps = 0;
    double delta = 0.0;
    double y0_scheme = 0.0;
    double y0_oracle = 0.0;      // 0 when the study has no oracle
    double oracle_stderr = 0.0;
    double abs_error = 0.0;      // 0 when the study has no oracle
    double p0 = 0.0;
    double xx0_ratio = 0.0;
    std::uint64_t nodes = 0;
    double seconds = 0.0;

    bool operator==(const ConvergenceRow&) const = default;
};

struct ConvergenceReport {
    std::string version;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config_echo;
    std::string oracle_method = "none";
    std::uint64_t oracle_samples = 0;
    std::vector<ConvergenceRow> rows;
    bool has_oracle = false;
    bool has_verdict = false;
    bool pass = false;
    std::string verdict_detail;

    bool operator==(const ConvergenceReport&) const = default;
};

/// One (pair, refinement) cell of a stability study.
struct StabilityRow {
    int pair_id = 0;
    int steps = 0;
    double lhs_max_dy2 = 0.0;   // E max_j |dY_j|^2
    double lhs_z = 0.0;         // sum_j E |dZ_j|^2 delta
    double lhs_m = 0.0;         // sum_j E |d(dM)_j|^2
    double lhs_jump = 0.0;      // sum_j E |dZt_j(dX) - E dZt_j(dX)|^2
    double lhs_total = 0.0;
    double rhs_total = 0.0;     // E |dF|^2 + sum_j E |df_j|^2 delta
    double ratio = 0.0;         // lhs / rhs, 0 when both vanish
    double lemma_num = 0.0;     // sum_j E[E_j|U|^2 - |E_j U|^2]
    double lemma_den = 0.0;     // sum_j E|E_j U|^2

    bool operator==(const StabilityRow&) const = default;
};

struct StabilityReport {
    std::string version;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config_echo;
    std::vector<StabilityRow> rows;
    double max_ratio = 0.0;
    bool pass = false;
    std::string verdict_detail;

    bool operator==(const StabilityReport&) const = default;
};

/// One named diagnostic of a validation run.
struct ValidationRow {
    std::string check;
    double residual = 0.0;
    std::string status;  // PASS | FAIL | SKIP
    std::string detail;

    bool operator==(const ValidationRow&) const = default;
};

struct ValidationReport {
    std::string version;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config_echo;
    std::vector<ValidationRow> rows;
    bool pass = false;

    bool operator==(const ValidationReport&) const = default;
};

/// Shortest-round-trip decimal rendering used by every CSV writer, so that
/// identical runs emit identical bytes.
std::string format_double(double v);

/// CSV / JSON serialization.  When `include_timings` is false every wall-time
/// field is written as 0, making repeated runs byte-identical.
std::string convergence_csv(const ConvergenceReport& r, bool include_timings);
std::string convergence_json(const ConvergenceReport& r, bool include_timings);
ConvergenceReport convergence_from_json(const std::string& text);

std::string stability_csv(const StabilityReport& r);
std::string stability_json(const StabilityReport& r);
StabilityReport stability_from_json(const std::string& text);

std::string validation_csv(const ValidationReport& r);
std::string validation_json(const ValidationReport& r);
ValidationReport validation_from_json(const std::string& text);

}  // namespace bsdelta
