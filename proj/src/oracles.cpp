#include "bsdelta/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "bsdelta/errors.hpp"
#include "bsdelta/rng.hpp"

namespace bsdelta {

TerminalFunctional make_terminal_functional(const std::string& name,
                                            double strike, double shift) {
    TerminalFunctional h;
    h.name = name;
    h.strike = strike;
    h.shift = shift;
    if (name == "identity") {
        h.kind = TerminalFunctional::Kind::identity;
        h.fn = [](double x) { return x; };
        h.lipschitz_K = 1.0;
    } else if (name == "square") {
        h.kind = TerminalFunctional::Kind::square;
        h.fn = [](double x) { return x * x; };
        h.lipschitz_K = 0.0;  // not globally Lipschitz; harmless here
    } else if (name == "call") {
        h.kind = TerminalFunctional::Kind::call;
        h.fn = [strike](double x) { return std::max(x - strike, 0.0); };
        h.lipschitz_K = 1.0;
    } else if (name == "put") {
        h.kind = TerminalFunctional::Kind::put;
        h.fn = [strike](double x) { return std::max(strike - x, 0.0); };
        h.lipschitz_K = 1.0;
    } else if (name == "affine") {
        h.kind = TerminalFunctional::Kind::affine;
        h.fn = [shift](double x) { return x + shift; };
        h.lipschitz_K = 1.0;
    } else {
        throw ConfigError("terminal: unknown functional '" + name + "'");
    }
    return h;
}

bool has_closed_form(const TerminalFunctional& h) {
    switch (h.kind) {
        case TerminalFunctional::Kind::identity:
        case TerminalFunctional::Kind::square:
        case TerminalFunctional::Kind::affine:
            return true;
        default:
            return false;
    }
}

OracleValue expectation_terminal(const LevyModel& model,
                                 const TerminalFunctional& h, double horizon,
                                 const std::string& method,
                                 std::uint64_t n_samples, std::uint64_t seed) {
    if (method == "closed_form") {
        OracleValue v;
        v.method = "closed_form";
        switch (h.kind) {
            case TerminalFunctional::Kind::identity:
                v.value = 0.0;  // the compensated walk is a martingale
                return v;
            case TerminalFunctional::Kind::affine:
                v.value = h.shift;
                return v;
            case TerminalFunctional::Kind::square:
                v.value = horizon * second_moment(model);
                return v;
            default:
                throw ConfigError("expectation_terminal: no closed form for '" +
                                  h.name + "'");
        }
    }
    if (method != "monte_carlo")
        throw ConfigError("expectation_terminal: unknown method '" + method +
                          "'");
    if (!model.jump_sampler)
        throw NoSampler("expectation_terminal: " + model.name +
                        " has no exact jump sampler");
    if (n_samples == 0)
        throw ConfigError("expectation_terminal: n_samples must be positive");

    // Exact simulation of the compensated compound Poisson value at the
    // horizon: jump count ~ Poisson(lambda T), i.i.d. jump sizes, minus the
    // compensator drift T * integral x nu(dx).
    const double drift = horizon * model.mean_jump_rate;
    std::mt19937_64 rng = substream(seed, 0x6f7261636cULL);
    std::poisson_distribution<int> count(model.total_rate * horizon);
    const auto& sample_jump = *model.jump_sampler;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::uint64_t s = 0; s < n_samples; ++s) {
        const int jumps = count(rng);
        double x = -drift;
        for (int j = 0; j < jumps; ++j) x += sample_jump(rng);
        const double payoff = h.fn(x);
        sum += payoff;
        sum_sq += payoff * payoff;
    }
    OracleValue v;
    v.method = "monte_carlo";
    v.n_samples = n_samples;
    const double n = static_cast<double>(n_samples);
    v.value = sum / n;
    const double var = std::max(sum_sq / n - v.value * v.value, 0.0);
    v.std_error = std::sqrt(var / n);
    return v;
}

double linear_driver_value(double a, double c, double terminal_mean,
                           double horizon) {
    if (std::abs(a) < 1e-12) return terminal_mean + c * horizon;
    const double grow = std::exp(a * horizon);
    return grow * terminal_mean + (c / a) * (grow - 1.0);
}

namespace {

struct TreeEvaluator {
    const WalkLaw& walk;
    const Driver& driver;
    const TerminalCondition& terminal;
    const SolveOptions opts;
    detail::StepLaw sl;
    std::vector<std::int64_t> xoff;
    std::vector<std::int64_t> woff;
    std::vector<int> monitor_steps;

    double value(int i, Key state) {
        const int n = walk.grid.steps;
        if (i == n) return detail::terminal_value(walk, terminal, state);
        const bool record =
            std::binary_search(monitor_steps.begin(), monitor_steps.end(), i);
        const std::size_t nx = xoff.size();
        std::vector<double> childv(woff.size() * nx);
        Key child = state;
        if (record) child.rec.push_back(state.x);
        for (std::size_t wi = 0; wi < woff.size(); ++wi)
            for (std::size_t xi = 0; xi < nx; ++xi) {
                child.x = state.x + xoff[xi];
                child.w = state.w + woff[wi];
                childv[wi * nx + xi] = value(i + 1, child);
            }
        const auto child_y = [&](std::size_t wi, std::size_t xi) {
            return childv[wi * nx + xi];
        };
        std::vector<double> zt_buf;
        const detail::StepOut out = detail::one_step(
            sl, driver, i * walk.grid.delta(), child_y, zt_buf, opts);
        return out.y;
    }
};

}  // namespace

double brute_force_tree(const WalkLaw& walk, const Driver& driver,
                        const TerminalCondition& terminal,
                        std::size_t max_leaves) {
    const int n = walk.grid.steps;
    if (n > 4)
        throw TreeTooLarge("brute_force_tree: limited to 4 steps");
    const std::size_t branching =
        walk.x_law.support.size() *
        (walk.mixed() ? walk.w_law->support.size() : 1);
    double leaves = 1.0;
    for (int i = 0; i < n; ++i) leaves *= static_cast<double>(branching);
    if (leaves > static_cast<double>(max_leaves))
        throw TreeTooLarge("brute_force_tree: path count exceeds the guard");
    if (!(walk.x_law.unit > 0.0))
        throw SupportMismatch("brute_force_tree: jump law must be lattice-aligned");
    const double delta = walk.grid.delta();
    if (!(driver.lipschitz_K * delta < 1.0))
        throw ContractionViolation("brute_force_tree: K * delta >= 1");

    TreeEvaluator ev{walk, driver, terminal, SolveOptions{},
                     detail::make_step_law(walk), walk.x_law.offsets,
                     walk.mixed() ? walk.w_law->offsets
                                  : std::vector<std::int64_t>{0},
                     {}};
    const double d = walk.grid.delta();
    for (const double s : walk.grid.monitoring_dates) {
        const int m = static_cast<int>(std::round(s / d));
        if (m > 0 && m < n) ev.monitor_steps.push_back(m);
    }
    std::sort(ev.monitor_steps.begin(), ev.monitor_steps.end());
    return ev.value(0, Key{});
}

}  // namespace bsdelta
