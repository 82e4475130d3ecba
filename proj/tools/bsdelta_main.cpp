#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bsdelta/config.hpp"
#include "bsdelta/errors.hpp"
#include "bsdelta/harness.hpp"
#include "bsdelta/report.hpp"
#include "bsdelta/version.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::string format = "csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool out_set = false;
    bool no_timings = false;
};

bsdelta::ExperimentConfig load_config(const GlobalOpts& g) {
    bsdelta::ExperimentConfig cfg;
    if (!g.config_path.empty())
        cfg = bsdelta::parse_config_file(g.config_path);
    if (g.seed_set) cfg.seed = g.seed;
    if (g.out_set) cfg.out_dir = g.out_dir;
    return cfg;
}

std::filesystem::path ensure_out_dir(const bsdelta::ExperimentConfig& cfg) {
    std::filesystem::path dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw bsdelta::ConfigError("cannot open " + path.string() +
                                        " for writing");
    os << body;
    if (!os) throw bsdelta::ConfigError("failed writing " + path.string());
    std::cout << "wrote " << path.string() << "\n";
}

int run_discretize(const GlobalOpts& g) {
    const auto cfg = load_config(g);
    const auto dir = ensure_out_dir(cfg);
    const bsdelta::LevyModel model = bsdelta::build_model(cfg);
    bsdelta::QuadratureConfig q;
    q.tol = cfg.quad_tol;
    bsdelta::DiscretizeOptions opts;
    opts.bin_width_factor = cfg.bin_width_factor;
    opts.kappa = cfg.kappa;
    opts.widen_for_lift = cfg.widen_for_lift;
    for (const int n : cfg.steps_list) {
        const bsdelta::LawBundle bundle =
            bsdelta::make_increment_law(model, cfg.horizon / n, opts, q);
        write_file(dir / ("law_N" + std::to_string(n) + ".json"),
                   bsdelta::law_json(bundle));
        std::cout << "N=" << n << " atoms=" << bundle.law.support.size()
                  << " p0=" << bsdelta::format_double(bundle.law.prob_zero())
                  << "\n";
    }
    return 0;
}

int run_solve(const GlobalOpts& g) {
    const auto cfg = load_config(g);
    const auto dir = ensure_out_dir(cfg);
    int n = cfg.steps_list.front();
    for (const int cand : cfg.steps_list) n = std::max(n, cand);
    const bsdelta::SolvedInstance inst = bsdelta::solve_instance(cfg, n);
    const bool timings = !g.no_timings;
    if (g.format == "json")
        write_file(dir / ("solution_N" + std::to_string(n) + ".json"),
                   bsdelta::solution_json(inst.solution, inst.seconds, timings));
    else
        write_file(dir / ("solution_N" + std::to_string(n) + ".csv"),
                   bsdelta::solution_summary_csv(inst.solution, inst.seconds,
                                                 timings));
    std::cout << "N=" << n
              << " y0=" << bsdelta::format_double(inst.solution.y0)
              << " nodes=" << inst.solution.node_count << "\n";
    return 0;
}

int run_converge(const GlobalOpts& g) {
    const auto cfg = load_config(g);
    const auto dir = ensure_out_dir(cfg);
    const bsdelta::ConvergenceReport rep = bsdelta::run_convergence(cfg);
    const bool timings = !g.no_timings;
    if (g.format == "json")
        write_file(dir / "convergence.json",
                   bsdelta::convergence_json(rep, timings));
    else
        write_file(dir / "convergence.csv",
                   bsdelta::convergence_csv(rep, timings));
    std::cout << (rep.has_verdict ? (rep.pass ? "PASS" : "FAIL") : "REPORT")
              << ": " << rep.verdict_detail << "\n";
    return rep.pass ? 0 : 1;
}

int run_stability_cmd(const GlobalOpts& g) {
    const auto cfg = load_config(g);
    const auto dir = ensure_out_dir(cfg);
    const bsdelta::StabilityReport rep = bsdelta::run_stability(cfg);
    if (g.format == "json")
        write_file(dir / "stability.json", bsdelta::stability_json(rep));
    else
        write_file(dir / "stability.csv", bsdelta::stability_csv(rep));
    std::cout << (rep.pass ? "PASS" : "FAIL") << ": " << rep.verdict_detail
              << "\n";
    return rep.pass ? 0 : 1;
}

int run_validate(const GlobalOpts& g) {
    const auto cfg = load_config(g);
    const auto dir = ensure_out_dir(cfg);
    const bsdelta::ValidationReport rep = bsdelta::run_validation(cfg);
    if (g.format == "json")
        write_file(dir / "validation.json", bsdelta::validation_json(rep));
    else
        write_file(dir / "validation.csv", bsdelta::validation_csv(rep));
    for (const bsdelta::ValidationRow& row : rep.rows)
        std::cout << row.status << "  " << row.check << "  residual="
                  << bsdelta::format_double(row.residual) << "\n";
    std::cout << (rep.pass ? "PASS" : "FAIL") << ": " << rep.rows.size()
              << " checks\n";
    return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backward stochastic difference equations on random-walk "
                 "lattices: discretization, solving, and verification"};
    app.set_version_flag("--version", std::string(bsdelta::kVersion));
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "experiment config file (INI)")
        ->check(CLI::ExistingFile);
    auto* seed_opt =
        app.add_option("--seed", g.seed, "override the config seed");
    auto* out_opt =
        app.add_option("--out", g.out_dir, "override the output directory");
    app.add_option("--format", g.format, "report format")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--no-timings", g.no_timings,
                 "zero out wall-clock columns for byte-reproducible output");

    auto* c_disc = app.add_subcommand(
        "discretize", "build the walk increment laws and write them as JSON");
    auto* c_solve = app.add_subcommand(
        "solve", "backward-solve the largest configured refinement");
    auto* c_conv = app.add_subcommand(
        "converge", "solve every refinement and compare against the oracle");
    auto* c_stab = app.add_subcommand(
        "stability", "exact stability functionals over perturbed pairs");
    auto* c_val = app.add_subcommand(
        "validate", "run the construction / solver / oracle check suite");

    CLI11_PARSE(app, argc, argv);
    g.seed_set = seed_opt->count() > 0;
    g.out_set = out_opt->count() > 0;

    try {
        if (c_disc->parsed()) return run_discretize(g);
        if (c_solve->parsed()) return run_solve(g);
        if (c_conv->parsed()) return run_converge(g);
        if (c_stab->parsed()) return run_stability_cmd(g);
        if (c_val->parsed()) return run_validate(g);
    } catch (const bsdelta::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bsdelta::ContractionViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bsdelta::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
