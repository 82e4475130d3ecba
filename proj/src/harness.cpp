#include "bsdelta/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>

#include "bsdelta/errors.hpp"
#include "bsdelta/oracles.hpp"
#include "bsdelta/qlift.hpp"
#include "bsdelta/rng.hpp"
#include "bsdelta/version.hpp"
#include "json.hpp"

namespace bsdelta {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

QuadratureConfig quad_of(const ExperimentConfig& cfg) {
    QuadratureConfig q;
    q.tol = cfg.quad_tol;
    return q;
}

DiscretizeOptions dopts_of(const ExperimentConfig& cfg, bool snap = true) {
    DiscretizeOptions d;
    d.bin_width_factor = cfg.bin_width_factor;
    d.kappa = cfg.kappa;
    d.widen_for_lift = cfg.widen_for_lift;
    d.snap = snap;
    return d;
}

SolveOptions sopts_of(const ExperimentConfig& cfg) {
    SolveOptions s;
    s.fp_tol = cfg.fp_tol;
    return s;
}

std::vector<int> sorted_steps(const ExperimentConfig& cfg) {
    std::vector<int> ns = cfg.steps_list;
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    return ns;
}

/// Uniform draw on [-1, 1) from the top 53 bits; avoids the
/// implementation-defined layout of std::uniform_real_distribution.
double unit_pm1(std::mt19937_64& gen) {
    return std::ldexp(static_cast<double>(gen() >> 11), -52) - 1.0;
}

struct InstanceParts {
    LawBundle bundle;
    WalkLaw walk;
    Driver driver;
    TerminalCondition terminal;
};

InstanceParts build_parts(const LevyModel& model, const DriverSpec& spec,
                          const TerminalFunctional& h,
                          const ExperimentConfig& cfg, int steps,
                          bool with_monitoring, const std::string& brownian) {
    InstanceParts p;
    p.walk.grid = make_grid(cfg.horizon, steps,
                            with_monitoring ? cfg.monitoring
                                            : std::vector<double>{});
    const QuadratureConfig q = quad_of(cfg);
    p.bundle = make_increment_law(model, p.walk.grid.delta(), dopts_of(cfg), q);
    p.walk.x_law = p.bundle.law;
    if (brownian == "rademacher")
        p.walk.w_law = brownian_increment_law(p.walk.grid.delta(),
                                              BrownianVariant::rademacher);
    else if (brownian == "trinomial")
        p.walk.w_law = brownian_increment_law(p.walk.grid.delta(),
                                              BrownianVariant::trinomial);
    p.driver = lift_driver(spec, model, p.bundle.law, p.bundle.layout, q);
    p.terminal = terminal_of_xt(h.fn, h.name);
    p.terminal.lipschitz_K = h.lipschitz_K;
    return p;
}

struct ResolvedOracle {
    bool available = false;
    std::string method = "none";
    std::uint64_t samples = 0;
    double value = 0.0;
    double std_error = 0.0;
};

/// E[H(X_T)] pushed through the linear backward flow.  Only drivers without
/// jump dependence compose this way; anything else leaves the study without
/// a verdict.
ResolvedOracle resolve_oracle(const ExperimentConfig& cfg,
                              const LevyModel& model, const DriverSpec& spec,
                              const TerminalFunctional& h) {
    ResolvedOracle r;
    if (cfg.oracle_method == "none") return r;
    if (spec.kind == DriverSpec::Kind::jump_integral) return r;
    std::string method = cfg.oracle_method;
    if (method == "auto") {
        if (has_closed_form(h))
            method = "closed_form";
        else if (model.jump_sampler)
            method = "monte_carlo";
        else
            return r;
    }
    const OracleValue ef = expectation_terminal(model, h, cfg.horizon, method,
                                                cfg.n_samples, cfg.seed);
    const double a = spec.kind == DriverSpec::Kind::linear_y ? spec.a : 0.0;
    const double c = spec.kind == DriverSpec::Kind::zero ? 0.0 : spec.c;
    r.value = linear_driver_value(a, c, ef.value, cfg.horizon);
    r.std_error = ef.std_error * std::exp(a * cfg.horizon);
    r.method = ef.method;
    r.samples = ef.n_samples;
    r.available = true;
    return r;
}

}  // namespace

SolvedInstance solve_instance(const ExperimentConfig& cfg, int steps) {
    const auto start = Clock::now();
    const LevyModel model = build_model(cfg);
    const DriverSpec spec = build_driver_spec(cfg);
    const TerminalFunctional h = build_terminal_functional(cfg);
    InstanceParts parts =
        build_parts(model, spec, h, cfg, steps, true, cfg.brownian);
    SolvedInstance inst;
    inst.solution =
        backward_solve(parts.walk, parts.driver, parts.terminal, sopts_of(cfg));
    inst.bundle = std::move(parts.bundle);
    inst.walk = std::move(parts.walk);
    inst.seconds = elapsed_seconds(start);
    return inst;
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
    ConvergenceReport rep;
    rep.version = kVersion;
    rep.seed = cfg.seed;
    rep.config_echo = cfg.echo();

    const LevyModel model = build_model(cfg);
    const DriverSpec spec = build_driver_spec(cfg);
    const TerminalFunctional h = build_terminal_functional(cfg);
    const ResolvedOracle oracle = resolve_oracle(cfg, model, spec, h);
    rep.has_oracle = oracle.available;
    rep.oracle_method = oracle.method;
    rep.oracle_samples = oracle.samples;

    std::vector<std::string> row_failures;
    for (const int n : sorted_steps(cfg)) {
        try {
            const auto start = Clock::now();
            InstanceParts parts =
                build_parts(model, spec, h, cfg, n, true, cfg.brownian);
            const DiscreteSolution sol = backward_solve(
                parts.walk, parts.driver, parts.terminal, sopts_of(cfg));
            ConvergenceRow row;
            row.steps = n;
            row.delta = parts.walk.grid.delta();
            row.y0_scheme = sol.y0;
            if (oracle.available) {
                row.y0_oracle = oracle.value;
                row.oracle_stderr = oracle.std_error;
                row.abs_error = std::abs(sol.y0 - oracle.value);
            }
            row.p0 = parts.bundle.law.prob_zero();
            row.xx0_ratio = parts.bundle.law.abs_mean() / std::sqrt(row.delta);
            row.nodes = sol.node_count;
            row.seconds = elapsed_seconds(start);
            rep.rows.push_back(row);
        } catch (const Error& e) {
            row_failures.push_back("N=" + std::to_string(n) +
                                   " failed: " + e.what());
        }
    }

    std::ostringstream verdict;
    for (const std::string& f : row_failures) verdict << f << "; ";
    if (oracle.available && !rep.rows.empty()) {
        rep.has_verdict = true;
        const double slack = 3.0 * oracle.std_error + 1e-9;
        double band = slack;
        if (rep.rows.size() >= 2) {
            const auto& a = rep.rows[rep.rows.size() - 2];
            const auto& b = rep.rows.back();
            band += 2.0 * std::abs(b.y0_scheme - a.y0_scheme);
        }
        const bool final_ok = rep.rows.back().abs_error <= band;
        bool decay_ok = true;
        const std::size_t first =
            rep.rows.size() > 3 ? rep.rows.size() - 3 : 0;
        for (std::size_t i = first; i + 1 < rep.rows.size(); ++i)
            if (rep.rows[i + 1].abs_error > rep.rows[i].abs_error + slack)
                decay_ok = false;
        rep.pass = final_ok && decay_ok && row_failures.empty();
        verdict << "final error " << format_double(rep.rows.back().abs_error)
                << (final_ok ? " <= " : " > ") << "band "
                << format_double(band) << "; errors "
                << (decay_ok ? "nonincreasing" : "increasing")
                << " over the last refinements";
    } else {
        rep.has_verdict = false;
        rep.pass = row_failures.empty() && !rep.rows.empty();
        verdict << (oracle.available ? "" : "no oracle for this driver/terminal; ")
                << rep.rows.size() << " refinements solved";
    }
    rep.verdict_detail = verdict.str();
    return rep;
}

namespace {

struct PairCoeffs {
    int kind = 2;  // 0 identical, 1 translation, 2 random
    double a[2] = {0, 0};
    double c[2] = {0, 0};
    double r[2] = {0, 0};
    double t[2][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}};
};

PairCoeffs draw_pair(int pair_id, std::uint64_t seed) {
    PairCoeffs pc;
    if (pair_id == 0) {
        pc.kind = 0;
        return pc;
    }
    if (pair_id == 1) {
        pc.kind = 1;
        return pc;
    }
    std::mt19937_64 gen = substream(seed, 1000 + static_cast<std::uint64_t>(pair_id));
    for (int k = 0; k < 2; ++k) {
        pc.a[k] = unit_pm1(gen);
        pc.c[k] = unit_pm1(gen);
        pc.r[k] = unit_pm1(gen);
        for (int j = 0; j < 4; ++j) pc.t[k][j] = unit_pm1(gen);
    }
    return pc;
}

}  // namespace

StabilityPair make_stability_pair(int pair_id, const IncrementLaw& law,
                                  std::uint64_t seed) {
    StabilityPair out;
    const PairCoeffs pc = draw_pair(pair_id, seed);
    if (pc.kind == 0) {
        out.driver0 = linear_y_driver(0.3, 0.1);
        out.driver1 = linear_y_driver(0.3, 0.1);
        const auto h = [](double x) { return std::tanh(x) + 0.5; };
        out.terminal0 = terminal_of_xt(h, "stability_base");
        out.terminal1 = terminal_of_xt(h, "stability_base");
        return out;
    }
    if (pc.kind == 1) {
        // Same y-independent driver, terminal shifted by a constant: the
        // difference process is that constant and the ratio must be 1.
        out.driver0 = constant_driver(0.2);
        out.driver1 = constant_driver(0.2);
        out.terminal0 =
            terminal_of_xt([](double x) { return std::tanh(x); },
                           "stability_base");
        out.terminal1 =
            terminal_of_xt([](double x) { return std::tanh(x) + 0.75; },
                           "stability_shifted");
        return out;
    }
    // Bounded random perturbations: f_k = c + a y + sum rho(x) zt(x) x nu_pi,
    // H_k a bounded smooth function; coefficients depend only on (seed, id).
    const double damp = std::max(1.0, std::sqrt(law.sigma2));
    for (int k = 0; k < 2; ++k) {
        const double r = pc.r[k] / damp;
        std::vector<double> w(law.support.size(), 0.0);
        double knorm2 = 0.0;
        for (std::size_t i = 0; i < law.support.size(); ++i) {
            const double x = law.support[i];
            if (x == 0.0) continue;
            const double rho_x = r * x / (1.0 + x * x);
            w[i] = rho_x * law.probs[i] / law.delta;
            knorm2 += rho_x * rho_x * law.probs[i] / law.delta;
        }
        Driver d;
        const double a = pc.a[k];
        const double c = pc.c[k];
        d.eval = [a, c, w = std::move(w)](double, double y, double,
                                          std::span<const double> zt) {
            double acc = c + a * y;
            for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * zt[i];
            return acc;
        };
        d.lipschitz_K = std::abs(a) + std::sqrt(knorm2);
        d.depends_y = a != 0.0;
        d.depends_zt = true;
        d.name = "stability_random";

        const double t0 = pc.t[k][0];
        const double t1 = pc.t[k][1];
        const double t2 = pc.t[k][2];
        const double t3 = pc.t[k][3];
        TerminalCondition tc = terminal_of_xt(
            [t0, t1, t2, t3](double x) {
                return t0 + t1 * std::tanh(x) + t2 * std::sin(x) +
                       t3 * std::cos(2.0 * x);
            },
            "stability_random");
        tc.lipschitz_K = std::abs(t1) + std::abs(t2) + 2.0 * std::abs(t3);
        (k == 0 ? out.driver0 : out.driver1) = std::move(d);
        (k == 0 ? out.terminal0 : out.terminal1) = std::move(tc);
    }
    return out;
}

double expected_running_max_sq(const DiscreteSolution& sol,
                               const std::vector<std::vector<double>>& values) {
    if (values.size() != sol.slices.size())
        throw SupportMismatch(
            "expected_running_max_sq: one value table per slice required");
    for (std::size_t j = 0; j < values.size(); ++j)
        if (values[j].size() != sol.slices[j].keys.size())
            throw SupportMismatch(
                "expected_running_max_sq: value table misaligned with slice");

    const detail::StepLaw sl = detail::make_step_law(sol.walk);
    const std::size_t nw = sl.wq.size();
    const std::size_t nx = sl.xp.size();
    const std::size_t arity = nw * nx;
    std::vector<double> q(arity);
    for (std::size_t wi = 0; wi < nw; ++wi)
        for (std::size_t xi = 0; xi < nx; ++xi)
            q[wi * nx + xi] = sl.wq[wi] * sl.xp[xi];
    const auto children = child_table(sol);

    std::vector<std::vector<double>> absv(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        absv[j].resize(values[j].size());
        for (std::size_t v = 0; v < values[j].size(); ++v)
            absv[j][v] = std::abs(values[j][v]);
    }

    // The running max is at least the (deterministic) root value, so only
    // exceedance levels above it matter; for each level one absorbing
    // forward sweep yields P(max >= level) exactly.
    const double m0 = absv[0][0];
    std::vector<double> levels;
    for (const auto& row : absv)
        for (const double v : row)
            if (v > m0) levels.push_back(v);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    const int n = sol.walk.grid.steps;
    double acc = m0 * m0;
    double prev = m0;
    std::vector<double> cur, nxt;
    for (const double level : levels) {
        cur.assign(1, 1.0);
        for (int j = 0; j < n; ++j) {
            nxt.assign(sol.slices[j + 1].keys.size(), 0.0);
            const std::vector<std::size_t>& ch = children[j];
            for (std::size_t v = 0; v < cur.size(); ++v) {
                const double pv = cur[v];
                if (pv == 0.0 || absv[j][v] >= level) continue;
                const std::size_t* base = ch.data() + v * arity;
                for (std::size_t a = 0; a < arity; ++a)
                    nxt[base[a]] += pv * q[a];
            }
            cur.swap(nxt);
        }
        double survive = 0.0;
        for (std::size_t v = 0; v < cur.size(); ++v)
            if (absv[n][v] < level) survive += cur[v];
        acc += (level * level - prev * prev) * (1.0 - survive);
        prev = level;
    }
    return acc;
}

namespace {

StabilityRow stability_cell(int pair_id, const WalkLaw& walk,
                            const ExperimentConfig& cfg) {
    const StabilityPair pair =
        make_stability_pair(pair_id, walk.x_law, cfg.seed);
    const SolveOptions so = sopts_of(cfg);
    const DiscreteSolution s0 =
        backward_solve(walk, pair.driver0, pair.terminal0, so);

    const detail::StepLaw sl = detail::make_step_law(walk);
    const std::size_t nw = sl.wq.size();
    const std::size_t nx = sl.xp.size();
    const std::size_t arity = nw * nx;

    // The side-1 coefficient tables hold every node's jump row, and the
    // running-max sweep revisits the whole lattice once per distinct level,
    // so cost grows roughly with node_count^2 * arity.  Refuse sizes where
    // that would thrash instead of letting the process be killed.
    const double nodes = static_cast<double>(s0.node_count);
    const double table_bytes = nodes * (arity + nx + 1) * sizeof(double);
    const double sweep_work = nodes * nodes * arity;
    if (table_bytes > 2.5e8 || sweep_work > 2e10)
        throw StateExplosion(
            "stability_cell: the diagnostic tables and running-max sweep "
            "would need ~" +
            std::to_string(static_cast<long long>(table_bytes / 1e6)) +
            " MB and ~" +
            std::to_string(static_cast<long long>(sweep_work / 1e9)) +
            "e9 operations at N = " + std::to_string(walk.grid.steps) +
            "; use coarser steps or a single-bin law (large bin_width_factor "
            "with kappa = 1) for stability studies");

    const DiscreteSolution s1 =
        backward_solve(walk, pair.driver1, pair.terminal1, so);
    const int n = walk.grid.steps;
    const double delta = walk.grid.delta();
    const auto probs = node_probabilities(s0);

    // Side-1 coefficient tables, stored once so the accumulation over side-0
    // stays a single pass.
    std::vector<std::vector<double>> z1(n), zt1(n), dm1(n);
    for (int j = 0; j < n; ++j) {
        const std::size_t cnt = s0.slices[j].keys.size();
        z1[j].assign(cnt, 0.0);
        zt1[j].assign(cnt * nx, 0.0);
        dm1[j].assign(cnt * arity, 0.0);
    }
    visit_decompositions(s1, [&](int j, std::size_t v,
                                 const NodeDecomposition& d) {
        z1[j][v] = d.z;
        std::copy(d.zt.begin(), d.zt.end(), zt1[j].begin() + v * nx);
        std::copy(d.dm.begin(), d.dm.end(), dm1[j].begin() + v * arity);
    });

    StabilityRow row;
    row.pair_id = pair_id;
    row.steps = n;
    double rhs_f = 0.0;
    visit_decompositions(s0, [&](int j, std::size_t v,
                                 const NodeDecomposition& d) {
        const double pj = probs[j][v];
        const double t = j * delta;
        const double dz = d.z - z1[j][v];
        row.lhs_z += pj * dz * dz * delta;
        const double* dm_other = dm1[j].data() + v * arity;
        for (std::size_t wi = 0; wi < nw; ++wi)
            for (std::size_t xi = 0; xi < nx; ++xi) {
                const double ddm = d.dm[wi * nx + xi] - dm_other[wi * nx + xi];
                row.lhs_m += pj * sl.wq[wi] * sl.xp[xi] * ddm * ddm;
            }
        const double* zt_other = zt1[j].data() + v * nx;
        double gbar = 0.0;
        for (std::size_t xi = 0; xi < nx; ++xi)
            gbar += sl.xp[xi] * (d.zt[xi] - zt_other[xi]);
        double spread = 0.0;
        for (std::size_t xi = 0; xi < nx; ++xi) {
            const double g = d.zt[xi] - zt_other[xi];
            spread += sl.xp[xi] * (g - gbar) * (g - gbar);
        }
        row.lhs_jump += pj * spread;
        row.lemma_den += pj * gbar * gbar;
        const double y0v = s0.slices[j].y[v];
        const double df =
            pair.driver0.eval(t, y0v, d.z, d.zt) -
            pair.driver1.eval(t, y0v, d.z, d.zt);
        rhs_f += pj * delta * df * df;
    });
    row.lemma_num = row.lhs_jump;

    std::vector<std::vector<double>> dy(s0.slices.size());
    for (std::size_t j = 0; j < s0.slices.size(); ++j) {
        dy[j].resize(s0.slices[j].y.size());
        for (std::size_t v = 0; v < dy[j].size(); ++v)
            dy[j][v] = s0.slices[j].y[v] - s1.slices[j].y[v];
    }
    double rhs_terminal = 0.0;
    for (std::size_t v = 0; v < dy.back().size(); ++v)
        rhs_terminal += probs[n][v] * dy.back()[v] * dy.back()[v];

    row.lhs_max_dy2 = expected_running_max_sq(s0, dy);
    row.lhs_total = row.lhs_max_dy2 + row.lhs_z + row.lhs_m + row.lhs_jump;
    row.rhs_total = rhs_terminal + rhs_f;
    if (row.rhs_total > 0.0)
        row.ratio = row.lhs_total / row.rhs_total;
    else
        row.ratio = row.lhs_total == 0.0 ? 0.0 : -1.0;  // -1 marks undefined
    return row;
}

}  // namespace

StabilityReport run_stability(const ExperimentConfig& cfg) {
    StabilityReport rep;
    rep.version = kVersion;
    rep.seed = cfg.seed;
    rep.config_echo = cfg.echo();

    const LevyModel model = build_model(cfg);
    const std::vector<int> ns = sorted_steps(cfg);
    const QuadratureConfig q = quad_of(cfg);

    std::vector<WalkLaw> walks;
    for (const int n : ns) {
        WalkLaw walk;
        walk.grid = make_grid(cfg.horizon, n);
        walk.x_law =
            make_increment_law(model, walk.grid.delta(), dopts_of(cfg), q).law;
        walks.push_back(std::move(walk));
    }

    for (int pair = 0; pair < cfg.n_pairs; ++pair)
        for (const WalkLaw& walk : walks)
            rep.rows.push_back(stability_cell(pair, walk, cfg));

    bool all_defined = true;
    double max_small = 0.0;
    double max_large = 0.0;
    bool lemma_ok = true;
    for (const StabilityRow& row : rep.rows) {
        if (row.ratio < 0.0) all_defined = false;
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        if (row.steps == ns.front()) max_small = std::max(max_small, row.ratio);
        if (row.steps == ns.back()) max_large = std::max(max_large, row.ratio);
        // Only judge the lower bound where the denominator is macroscopic;
        // below rounding scale both sides are pure noise.
        if (row.lemma_den > 1e-18 * std::max(1.0, row.lhs_total) &&
            row.lemma_num + 1e-15 * std::max(1.0, row.lemma_den) <
                row.lemma_den / 3.0)
            lemma_ok = false;
    }
    const bool growth_ok =
        ns.size() < 2 || max_large <= 2.0 * max_small + 1e-12;
    rep.pass = all_defined && growth_ok && lemma_ok;
    std::ostringstream verdict;
    verdict << "max ratio " << format_double(rep.max_ratio) << " over "
            << cfg.n_pairs << " pairs; "
            << (all_defined ? "all ratios defined" : "undefined ratio present")
            << "; coarsest-vs-finest max " << format_double(max_small) << " -> "
            << format_double(max_large)
            << (growth_ok ? " (no blow-up)" : " (grows)") << "; lower bound "
            << (lemma_ok ? "holds" : "violated");
    rep.verdict_detail = verdict.str();
    return rep;
}

namespace {

void add_row(ValidationReport& rep, const std::string& check, double residual,
             bool ok, const std::string& detail) {
    rep.rows.push_back({check, residual, ok ? "PASS" : "FAIL", detail});
}

void add_skip(ValidationReport& rep, const std::string& check,
              const std::string& detail) {
    rep.rows.push_back({check, 0.0, "SKIP", detail});
}

std::string fmt_delta(double delta) {
    return "delta=" + format_double(delta);
}

}  // namespace

ValidationReport run_validation(const ExperimentConfig& cfg) {
    ValidationReport rep;
    rep.version = kVersion;
    rep.seed = cfg.seed;
    rep.config_echo = cfg.echo();

    const LevyModel model = build_model(cfg);
    const QuadratureConfig q = quad_of(cfg);
    const std::vector<int> ns = sorted_steps(cfg);

    std::vector<double> ladder;
    if (ns.size() >= 3)
        for (const int n : ns) ladder.push_back(cfg.horizon / n);
    else
        for (const int n : {10, 20, 40, 80, 160})
            ladder.push_back(cfg.horizon / n);

    // Construction exactness on the raw (unsnapped) laws: the moment
    // constraints are solved into the central atoms, so the residuals must
    // sit at rounding level.
    try {
        double r_mass = 0.0, r_mean = 0.0, r_var = 0.0, r_central = 0.0;
        double margin_zero = 1.0, margin_lift = 1e300;
        double lift_finest = 0.0;
        std::string where;
        for (const double delta : ladder) {
            const LawBundle b =
                make_increment_law(model, delta, dopts_of(cfg, false), q);
            const IncrementLaw& law = b.law;
            double mass = 0.0, mean = 0.0, var = 0.0;
            double p_plus = 0.0, p_minus = 0.0;
            for (std::size_t i = 0; i < law.support.size(); ++i) {
                mass += law.probs[i];
                mean += law.support[i] * law.probs[i];
                var += law.support[i] * law.support[i] * law.probs[i];
                if (law.atom_index[i] == 1) p_plus = law.probs[i];
                if (law.atom_index[i] == -1) p_minus = law.probs[i];
            }
            r_mass = std::max(r_mass, std::abs(mass - 1.0));
            r_mean = std::max(r_mean, std::abs(mean));
            r_var = std::max(r_var, std::abs(var - delta * law.sigma2));
            r_central = std::max(
                r_central, std::max(std::abs(p_plus - p_minus),
                                    std::max(0.0, std::max(p_plus, p_minus) -
                                                      1.0 / 6.0)));
            margin_zero = std::min(margin_zero, law.prob_zero() - 1.0 / 3.0);
            margin_lift =
                std::min(margin_lift, b.layout.v_within - b.layout.s_central);
            lift_finest = b.layout.v_within - b.layout.s_central;
            where += (where.empty() ? "" : " ") + fmt_delta(delta);
        }
        add_row(rep, "construction_mass", r_mass, r_mass <= 1e-12,
                "max |sum p - 1| over " + where);
        add_row(rep, "construction_mean", r_mean, r_mean <= 1e-12,
                "max |sum x p| over " + where);
        add_row(rep, "construction_variance", r_var, r_var <= 1e-10,
                "max |sum x^2 p - delta sigma^2| over " + where);
        add_row(rep, "construction_central", r_central, r_central <= 1e-12,
                "max of |p(+h) - p(-h)| and the 1/6 cap excess");
        add_row(rep, "zero_jump", margin_zero, margin_zero > 0.0,
                "min of P(dX = 0) - 1/3; positive keeps the scheme stable");
        // V >= S is a small-step property: it can be unachievable at very
        // coarse steps, so the requirement binds at the finest ladder step.
        add_row(rep, "lift_bound", lift_finest, lift_finest >= -1e-12,
                "V - S at the finest step (min over the ladder was " +
                    format_double(margin_lift) +
                "); nonnegative makes the lift non-expanding");
    } catch (const Error& e) {
        add_row(rep, "construction", 0.0, false, e.what());
    }

    // Moment conditions of the laws actually handed to the solver.
    try {
        const MomentConditionReport mom =
            validate_moment_conditions(model, ladder, dopts_of(cfg), q);
        double worst_rel_step = 0.0;
        double worst_xx1 = 0.0;
        for (std::size_t k = 0; k < mom.rows.size(); ++k) {
            worst_xx1 = std::max(worst_xx1, mom.rows[k].xx1_resid);
            if (k + 1 < mom.rows.size() && mom.rows[k].xx0_ratio > 0.0)
                worst_rel_step = std::max(
                    worst_rel_step, (mom.rows[k + 1].xx0_ratio -
                                     mom.rows[k].xx0_ratio) /
                                        mom.rows[k].xx0_ratio);
        }
        const double first_ratio = mom.rows.front().xx0_ratio;
        const double last_ratio = mom.rows.back().xx0_ratio;
        // Wide or coarse binning makes the ratio wobble between adjacent
        // steps; the requirement is overall decay without large swings.
        add_row(rep, "xx0_decay", worst_rel_step,
                worst_rel_step <= 0.5 && last_ratio <= 0.8 * first_ratio,
                "E|dX|/sqrt(delta) from " + format_double(first_ratio) +
                    " to " + format_double(last_ratio) +
                    "; worst adjacent relative increase reported");
        add_row(rep, "xx1_variance", worst_xx1, worst_xx1 <= 1e-10,
                "max |sum x^2 p / delta - sigma^2| over the ladder");
    } catch (const Error& e) {
        add_row(rep, "moment_conditions", 0.0, false, e.what());
    }

    // Weak convergence of the discrete jump intensity away from zero.  Two
    // regime facts shape this check.  First, when the measure has unbalanced
    // tails the mean-balancing threshold tends to a fixed band edge as the
    // mesh shrinks, and no mass is ever represented inside that band, so only
    // test functions supported clear of the limiting band can converge.
    // Second, widening bins to enforce V >= S keeps bin widths of order one
    // for such measures, trading this condition away; what converges is the
    // partition scheme itself (widths proportional to h), so widening is off
    // here.  The dedicated ladder pins the coarsest bin width to half the
    // smallest checked dead zone and halves it twice.
    try {
        DiscretizeOptions xopts = dopts_of(cfg);
        xopts.widen_for_lift = false;
        const auto [band_m, band_p] = balance_thresholds(model, 0.01, q);
        const double band = std::max(band_m, band_p);
        // An empty ladder returns just the test-function metadata.
        const MomentConditionReport meta = validate_moment_conditions(
            model, std::span<const double>{}, xopts, q);
        double inner_min = 1e300;
        std::vector<bool> checked(meta.test_inner.size(), false);
        for (std::size_t t = 0; t < meta.test_inner.size(); ++t)
            if (meta.test_inner[t] >= 1.25 * band) {
                checked[t] = true;
                inner_min = std::min(inner_min, meta.test_inner[t]);
            }
        if (inner_min == 1e300) {
            add_skip(rep, "xx2_weak_convergence",
                     "limiting central band " + format_double(band) +
                         " covers every test function's support");
        } else {
            const double h0 =
                inner_min / (2.0 * std::max(1.0, cfg.bin_width_factor));
            const double sigma2 = second_moment(model, q);
            std::vector<double> xladder;
            for (int k = 0; k < 3; ++k) {
                const double hk = h0 * std::pow(2.0, -k);
                xladder.push_back(hk * hk / (3.0 * sigma2));
            }
            const MomentConditionReport xm =
                validate_moment_conditions(model, xladder, xopts, q);
            bool ok = true;
            double worst = 0.0;
            std::string detail;
            for (std::size_t t = 0; t < xm.test_names.size(); ++t) {
                if (!checked[t]) {
                    detail += xm.test_names[t] + " excluded (support enters "
                              "the limiting band " + format_double(band) +
                              "); ";
                    continue;
                }
                const double first = xm.rows.front().xx2[t];
                const double last = xm.rows.back().xx2[t];
                if (last > (2.0 / 3.0) * std::max(first, 1e-9)) ok = false;
                worst = std::max(worst, last);
                detail += xm.test_names[t] + " " + format_double(first) +
                          "->" + format_double(last) + "; ";
            }
            add_row(rep, "xx2_weak_convergence", worst, ok,
                    "residual vs the jump measure over a 4x bin-width "
                    "refinement: " + detail);
        }
    } catch (const Error& e) {
        add_row(rep, "xx2_weak_convergence", 0.0, false, e.what());
    }

    // Brownian walk moments.
    for (const auto& [name, variant] :
         {std::pair{"brownian_rademacher", BrownianVariant::rademacher},
          std::pair{"brownian_trinomial", BrownianVariant::trinomial}}) {
        const double resid = check_brownian_condition(
            brownian_increment_law(cfg.horizon / ns.front(), variant));
        add_row(rep, name, resid, resid <= 1e-14,
                "max of |E dW| and |E dW^2 - delta|");
    }

    // Lift Lipschitz property and the representation identity on the finest
    // ladder step: the non-expanding lift is a small-step guarantee, and at
    // very coarse steps V >= S can be outright unachievable.  The bound is a
    // statement about the measure-side partition (atoms at exact bin means);
    // snapping re-solves the central atoms and can shave the +-h masses below
    // what the central band needs, so measure it pre-snap.
    try {
        const LawBundle b = make_increment_law(model, ladder.back(),
                                               dopts_of(cfg, false), q);
        const std::size_t m = b.law.support.size();
        const std::size_t zero = b.law.zero_pos();
        QuadratureConfig tightq;
        tightq.tol = 1e-13;
        double worst = -1e300;
        for (int trial = 0; trial < 100; ++trial) {
            std::mt19937_64 gen =
                substream(cfg.seed, 7000 + static_cast<std::uint64_t>(trial));
            std::vector<double> za(m), zb(m), diff(m);
            for (std::size_t i = 0; i < m; ++i) {
                za[i] = unit_pm1(gen);
                zb[i] = unit_pm1(gen);
            }
            za[zero] = 0.0;
            zb[zero] = 0.0;
            for (std::size_t i = 0; i < m; ++i) diff[i] = za[i] - zb[i];
            const double iq = i_q(model, b.law, b.layout, za, zb, tightq);
            worst = std::max(worst, iq - pi_norm2(b.law, diff));
        }
        add_row(rep, "q_lipschitz_random", std::max(worst, 0.0),
                worst <= 1e-12,
                "max of I_Q - |dz|^2 over 100 random coefficient pairs");

        std::mt19937_64 gen = substream(cfg.seed, 8000);
        std::vector<double> f(m);
        for (std::size_t i = 0; i < m; ++i) f[i] = unit_pm1(gen);
        const double rres = representation_check(b.law, f);
        add_row(rep, "representation", rres, rres <= 1e-12,
                "max |F - (E F + Zt(dX) - E Zt(dX))| for a random terminal");
    } catch (const Error& e) {
        add_row(rep, "q_lipschitz_random", 0.0, false, e.what());
    }

    // Solver diagnostics on the configured instance (pure-jump probe at the
    // coarsest refinement), plus a small mixed probe.
    const DriverSpec spec = build_driver_spec(cfg);
    const TerminalFunctional h = build_terminal_functional(cfg);
    std::optional<InstanceParts> probe;
    std::optional<DiscreteSolution> probe_sol;
    try {
        probe = build_parts(model, spec, h, cfg, ns.front(), true, "none");
        probe_sol = backward_solve(probe->walk, probe->driver, probe->terminal,
                                   sopts_of(cfg));
    } catch (const Error& e) {
        add_row(rep, "pure_jump_solve", 0.0, false, e.what());
    }
    if (probe_sol) {
        // Residuals of exact identities sit at rounding level relative to the
        // magnitude of the value process, so the tolerance scales with it.
        double yscale = 1.0;
        for (const Slice& s : probe_sol->slices)
            for (const double y : s.y) yscale = std::max(yscale, std::abs(y));
        const double mtol = 1e-12 * yscale;
        const MartingaleDiagnostics diag = compute_m_increments(*probe_sol);
        add_row(rep, "pure_jump_martingale", diag.max_abs_dm,
                diag.max_abs_dm <= mtol,
                "max |dM| over all nodes (tolerance scaled to max |Y| = " +
                    format_double(yscale) +
                    "); the orthogonal part vanishes in pure-jump mode");
        const double orth = orthogonality_check(*probe_sol);
        add_row(rep, "pure_jump_orthogonality", orth, orth <= mtol,
                "max residual against dW and compensated k(dX) martingales");

        const auto probs = node_probabilities(*probe_sol);
        const Slice& last = probe_sol->slices.back();
        const double unit = probe->walk.x_law.unit;
        double mean = 0.0, second = 0.0;
        for (std::size_t v = 0; v < last.keys.size(); ++v) {
            const double x = static_cast<double>(last.keys[v].x) * unit;
            mean += probs.back()[v] * x;
            second += probs.back()[v] * x * x;
        }
        add_row(rep, "terminal_mean", std::abs(mean), std::abs(mean) <= 1e-10,
                "|E X_T| on the lattice; the compensated walk is centered");
        const double sres =
            std::abs(second - cfg.horizon * model.sigma2);
        add_row(rep, "terminal_second_moment", sres, sres <= 1e-9,
                "|E X_T^2 - T sigma^2| on the lattice");

        try {
            const PicardResult pic =
                picard_solve(probe->walk, probe->driver, probe->terminal,
                             cfg.picard_max, cfg.picard_tol, sopts_of(cfg));
            bool monotone = true;
            for (std::size_t k = 1; k + 1 < pic.distances.size(); ++k)
                if (pic.distances[k + 1] > pic.distances[k] + 1e-15)
                    monotone = false;
            add_row(rep, "picard_decay", pic.distances.back(),
                    monotone && pic.distances.back() <= cfg.picard_tol,
                    std::to_string(pic.iterations) +
                        " sweeps; gaps nonincreasing after the first");
            const double gap = std::abs(pic.solution.y0 - probe_sol->y0);
            add_row(rep, "picard_matches_backward", gap, gap <= 1e-9,
                    "|Y0(picard) - Y0(backward induction)|");
        } catch (const Error& e) {
            add_row(rep, "picard_decay", 0.0, false, e.what());
        }

        if (!model.jump_sampler) {
            add_skip(rep, "terminal_oracle_mc",
                     "no exact jump sampler for " + model.name);
        } else if (cfg.oracle_method == "none") {
            add_skip(rep, "terminal_oracle_mc", "oracle disabled by config");
        } else {
            try {
                const std::uint64_t n_mc =
                    std::min<std::uint64_t>(cfg.n_samples, 200000);
                const OracleValue mc = expectation_terminal(
                    model, h, cfg.horizon, "monte_carlo", n_mc, cfg.seed);
                double lattice = 0.0;
                for (std::size_t v = 0; v < last.keys.size(); ++v) {
                    const double x =
                        static_cast<double>(last.keys[v].x) * unit;
                    lattice += probs.back()[v] * h.fn(x);
                }
                const double gap = std::abs(lattice - mc.value);
                const double band =
                    5.0 * mc.std_error +
                    std::sqrt(probe->walk.grid.delta() * model.sigma2) *
                        std::max(1.0, h.lipschitz_K);
                add_row(rep, "terminal_oracle_mc", gap, gap <= band,
                        "lattice E[H(X_T)] vs Monte Carlo, band " +
                            format_double(band));
            } catch (const Error& e) {
                add_row(rep, "terminal_oracle_mc", 0.0, false, e.what());
            }
        }
    }

    try {
        InstanceParts mixed = build_parts(model, spec, h, cfg,
                                          std::min(ns.front(), 4), false,
                                          "trinomial");
        const DiscreteSolution msol = backward_solve(
            mixed.walk, mixed.driver, mixed.terminal, sopts_of(cfg));
        double yscale = 1.0;
        for (const Slice& s : msol.slices)
            for (const double y : s.y) yscale = std::max(yscale, std::abs(y));
        const double orth = orthogonality_check(msol);
        add_row(rep, "mixed_orthogonality", orth, orth <= 1e-12 * yscale,
                "trinomial Brownian walk, " +
                    std::to_string(mixed.walk.grid.steps) +
                    " steps (tolerance scaled to max |Y| = " +
                    format_double(yscale) + ")");
    } catch (const ContractionViolation& e) {
        add_skip(rep, "mixed_orthogonality",
                 std::string("driver too stiff for the short mixed probe: ") +
                     e.what());
    } catch (const Error& e) {
        add_row(rep, "mixed_orthogonality", 0.0, false, e.what());
    }

    rep.pass = true;
    for (const ValidationRow& row : rep.rows)
        if (row.status == "FAIL") rep.pass = false;
    return rep;
}

std::string law_json(const LawBundle& bundle) {
    nlohmann::json j;
    j["h"] = bundle.law.h;
    j["h_minus"] = bundle.layout.h_minus;
    j["h_plus"] = bundle.layout.h_plus;
    j["delta"] = bundle.law.delta;
    j["sigma2"] = bundle.law.sigma2;
    j["support"] = bundle.law.support;
    j["probs"] = bundle.law.probs;
    std::vector<double> edges_pos, edges_neg;
    for (const Bin& b : bundle.layout.bins) {
        if (b.index > 0) edges_pos.push_back(b.lo);
        if (b.index < 0 && std::isfinite(b.hi)) edges_neg.push_back(b.hi);
    }
    std::reverse(edges_neg.begin(), edges_neg.end());
    j["edges_pos"] = edges_pos;
    j["edges_neg"] = edges_neg;
    return j.dump(2) + "\n";
}

std::string solution_summary_csv(const DiscreteSolution& sol, double seconds,
                                 bool include_timings) {
    (void)seconds;
    (void)include_timings;
    const auto probs = node_probabilities(sol);
    std::ostringstream os;
    os << "slice,time,nodes,y_mean,y_min,y_max\n";
    const double delta = sol.walk.grid.delta();
    for (std::size_t j = 0; j < sol.slices.size(); ++j) {
        const Slice& s = sol.slices[j];
        double mean = 0.0;
        double lo = s.y.empty() ? 0.0 : s.y.front();
        double hi = lo;
        for (std::size_t v = 0; v < s.y.size(); ++v) {
            mean += probs[j][v] * s.y[v];
            lo = std::min(lo, s.y[v]);
            hi = std::max(hi, s.y[v]);
        }
        os << j << ',' << format_double(j * delta) << ',' << s.keys.size()
           << ',' << format_double(mean) << ',' << format_double(lo) << ','
           << format_double(hi) << '\n';
    }
    return os.str();
}

std::string solution_json(const DiscreteSolution& sol, double seconds,
                          bool include_timings) {
    const auto probs = node_probabilities(sol);
    nlohmann::json slices = nlohmann::json::array();
    const double delta = sol.walk.grid.delta();
    for (std::size_t j = 0; j < sol.slices.size(); ++j) {
        const Slice& s = sol.slices[j];
        double mean = 0.0;
        double lo = s.y.empty() ? 0.0 : s.y.front();
        double hi = lo;
        for (std::size_t v = 0; v < s.y.size(); ++v) {
            mean += probs[j][v] * s.y[v];
            lo = std::min(lo, s.y[v]);
            hi = std::max(hi, s.y[v]);
        }
        slices.push_back({{"slice", j},
                          {"time", j * delta},
                          {"nodes", s.keys.size()},
                          {"y_mean", mean},
                          {"y_min", lo},
                          {"y_max", hi}});
    }
    nlohmann::json j = {{"kind", "solution"},
                        {"version", kVersion},
                        {"y0", sol.y0},
                        {"node_count", sol.node_count},
                        {"max_fp_residual", sol.max_fp_residual},
                        {"steps", sol.walk.grid.steps},
                        {"seconds", include_timings ? seconds : 0.0},
                        {"slices", slices}};
    return j.dump(2) + "\n";
}

}  // namespace bsdelta
