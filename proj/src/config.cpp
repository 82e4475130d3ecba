#include "bsdelta/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "bsdelta/errors.hpp"

namespace bsdelta {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& what) {
    std::ostringstream msg;
    msg << origin << ":" << line << ": " << what;
    throw ConfigError(msg.str());
}

double parse_double(const std::string& origin, int line,
                    const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            fail(origin, line, "trailing characters in number '" + value + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(origin, line, "expected a number, got '" + value + "'");
    }
}

std::int64_t parse_int(const std::string& origin, int line,
                       const std::string& value) {
    std::int64_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        fail(origin, line, "expected an integer, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& origin, int line, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    fail(origin, line, "expected a boolean, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string cur;
    for (const char ch : value) {
        if (ch == ',') {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    items.push_back(trim(cur));
    return items;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::map<std::string, std::string> ExperimentConfig::echo() const {
    std::map<std::string, std::string> m;
    m["model.name"] = model_name;
    if (model_name == "compound_poisson_normal") {
        m["model.lambda"] = fmt(lambda);
        m["model.sigma"] = fmt(sigma);
    } else if (model_name == "compound_poisson_double_exp") {
        m["model.lambda"] = fmt(lambda);
        m["model.p"] = fmt(p);
        m["model.eta1"] = fmt(eta1);
        m["model.eta2"] = fmt(eta2);
    } else {
        m["model.C"] = fmt(C);
        m["model.M"] = fmt(M);
    }
    m["grid.horizon"] = fmt(horizon);
    {
        std::ostringstream os;
        for (std::size_t i = 0; i < steps_list.size(); ++i)
            os << (i ? "," : "") << steps_list[i];
        m["grid.steps"] = os.str();
    }
    if (!monitoring.empty()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < monitoring.size(); ++i)
            os << (i ? "," : "") << fmt(monitoring[i]);
        m["grid.monitoring"] = os.str();
    }
    m["driver.name"] = driver_name;
    m["driver.a"] = fmt(driver_a);
    m["driver.b"] = fmt(driver_b);
    m["driver.c"] = fmt(driver_c);
    if (driver_name == "jump_integral") m["driver.rho_scale"] = fmt(rho_scale);
    m["terminal.name"] = terminal_name;
    m["terminal.strike"] = fmt(strike);
    m["terminal.shift"] = fmt(shift);
    m["discretization.kappa"] = std::to_string(kappa);
    m["discretization.bin_width_factor"] = fmt(bin_width_factor);
    m["discretization.widen_for_lift"] = widen_for_lift ? "true" : "false";
    m["discretization.brownian"] = brownian;
    m["oracle.method"] = oracle_method;
    m["oracle.n_samples"] = std::to_string(n_samples);
    m["stability.n_pairs"] = std::to_string(n_pairs);
    m["tolerances.quad_tol"] = fmt(quad_tol);
    m["tolerances.fp_tol"] = fmt(fp_tol);
    m["tolerances.picard_tol"] = fmt(picard_tol);
    m["tolerances.picard_max"] = std::to_string(picard_max);
    m["output.dir"] = out_dir;
    return m;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(origin, line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            static const std::vector<std::string> known = {
                "model",  "grid",      "driver",     "terminal", "discretization",
                "oracle", "stability", "tolerances", "output"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                fail(origin, line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            fail(origin, line, "expected 'key = value', got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (section.empty())
            fail(origin, line, "key '" + key + "' outside any section");
        const std::string qual = section + "." + key;

        if (qual == "model.name") {
            cfg.model_name = value;
        } else if (qual == "model.lambda") {
            cfg.lambda = parse_double(origin, line, value);
        } else if (qual == "model.sigma") {
            cfg.sigma = parse_double(origin, line, value);
        } else if (qual == "model.p") {
            cfg.p = parse_double(origin, line, value);
        } else if (qual == "model.eta1") {
            cfg.eta1 = parse_double(origin, line, value);
        } else if (qual == "model.eta2") {
            cfg.eta2 = parse_double(origin, line, value);
        } else if (qual == "model.C") {
            cfg.C = parse_double(origin, line, value);
        } else if (qual == "model.M") {
            cfg.M = parse_double(origin, line, value);
        } else if (qual == "grid.horizon") {
            cfg.horizon = parse_double(origin, line, value);
        } else if (qual == "grid.steps") {
            cfg.steps_list.clear();
            for (const std::string& item : split_list(value)) {
                const std::int64_t n = parse_int(origin, line, item);
                if (n < 1)
                    fail(origin, line, "step counts must be >= 1");
                cfg.steps_list.push_back(static_cast<int>(n));
            }
        } else if (qual == "grid.monitoring") {
            cfg.monitoring.clear();
            for (const std::string& item : split_list(value))
                cfg.monitoring.push_back(parse_double(origin, line, item));
        } else if (qual == "driver.name") {
            cfg.driver_name = value;
        } else if (qual == "driver.a") {
            cfg.driver_a = parse_double(origin, line, value);
        } else if (qual == "driver.b") {
            cfg.driver_b = parse_double(origin, line, value);
        } else if (qual == "driver.c") {
            cfg.driver_c = parse_double(origin, line, value);
        } else if (qual == "driver.rho_scale") {
            cfg.rho_scale = parse_double(origin, line, value);
        } else if (qual == "terminal.name") {
            cfg.terminal_name = value;
        } else if (qual == "terminal.strike") {
            cfg.strike = parse_double(origin, line, value);
        } else if (qual == "terminal.shift") {
            cfg.shift = parse_double(origin, line, value);
        } else if (qual == "discretization.kappa") {
            cfg.kappa = static_cast<int>(parse_int(origin, line, value));
        } else if (qual == "discretization.bin_width_factor") {
            cfg.bin_width_factor = parse_double(origin, line, value);
        } else if (qual == "discretization.widen_for_lift") {
            cfg.widen_for_lift = parse_bool(origin, line, value);
        } else if (qual == "discretization.brownian") {
            cfg.brownian = value;
        } else if (qual == "oracle.method") {
            cfg.oracle_method = value;
        } else if (qual == "oracle.n_samples") {
            const std::int64_t n = parse_int(origin, line, value);
            if (n < 1) fail(origin, line, "n_samples must be positive");
            cfg.n_samples = static_cast<std::uint64_t>(n);
        } else if (qual == "stability.n_pairs") {
            const std::int64_t n = parse_int(origin, line, value);
            if (n < 1) fail(origin, line, "n_pairs must be positive");
            cfg.n_pairs = static_cast<int>(n);
        } else if (qual == "tolerances.quad_tol") {
            cfg.quad_tol = parse_double(origin, line, value);
        } else if (qual == "tolerances.fp_tol") {
            cfg.fp_tol = parse_double(origin, line, value);
        } else if (qual == "tolerances.picard_tol") {
            cfg.picard_tol = parse_double(origin, line, value);
        } else if (qual == "tolerances.picard_max") {
            cfg.picard_max = static_cast<int>(parse_int(origin, line, value));
        } else if (qual == "output.dir") {
            cfg.out_dir = value;
        } else {
            fail(origin, line, "unknown key '" + key + "' in [" + section + "]");
        }
    }

    // Structural checks that do not need any numerics.
    if (cfg.steps_list.empty())
        throw ConfigError(origin + ": [grid] steps list is empty");
    if (!(cfg.horizon > 0.0))
        throw ConfigError(origin + ": [grid] horizon must be positive");
    if (cfg.kappa < 1)
        throw ConfigError(origin + ": [discretization] kappa must be >= 1");
    if (cfg.brownian != "none" && cfg.brownian != "rademacher" &&
        cfg.brownian != "trinomial")
        throw ConfigError(origin + ": [discretization] brownian must be "
                                   "none, rademacher, or trinomial");
    if (cfg.oracle_method != "auto" && cfg.oracle_method != "closed_form" &&
        cfg.oracle_method != "monte_carlo" && cfg.oracle_method != "none")
        throw ConfigError(origin + ": [oracle] method must be auto, "
                                   "closed_form, monte_carlo, or none");
    for (const int n : cfg.steps_list)
        (void)make_grid(cfg.horizon, n, cfg.monitoring);  // throws ConfigError

    // Name checks plus the contraction precondition: every listed N must keep
    // K * delta < 1, otherwise the implicit one-step equation has no unique
    // solution and the whole study is meaningless.
    (void)build_driver_spec(cfg);
    (void)build_terminal_functional(cfg);
    double k_bound = std::abs(cfg.driver_a) + std::abs(cfg.driver_b);
    if (cfg.driver_name == "zero" || cfg.driver_name == "constant") k_bound = 0.0;
    if (cfg.driver_name == "jump_integral") {
        const LevyModel model = build_model(cfg);
        k_bound += std::abs(cfg.rho_scale) * std::sqrt(model.sigma2);
    }
    const int n_min = *std::min_element(cfg.steps_list.begin(),
                                        cfg.steps_list.end());
    const double worst = k_bound * cfg.horizon / n_min;
    if (!(worst < 1.0)) {
        std::ostringstream msg;
        msg << origin << ": K * delta = " << worst << " >= 1 at N = " << n_min
            << "; refine the grid or weaken the driver";
        throw ContractionViolation(msg.str());
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

LevyModel build_model(const ExperimentConfig& cfg) {
    if (cfg.model_name == "compound_poisson_normal")
        return compound_poisson_normal(cfg.lambda, cfg.sigma);
    if (cfg.model_name == "compound_poisson_double_exp")
        return compound_poisson_double_exp(cfg.lambda, cfg.p, cfg.eta1, cfg.eta2);
    if (cfg.model_name == "variance_gamma_like")
        return variance_gamma_like(cfg.C, cfg.M);
    throw ConfigError("unknown model '" + cfg.model_name + "'");
}

DriverSpec build_driver_spec(const ExperimentConfig& cfg) {
    DriverSpec spec;
    spec.a = cfg.driver_a;
    spec.b = cfg.driver_b;
    spec.c = cfg.driver_c;
    if (cfg.driver_name == "zero") {
        spec.kind = DriverSpec::Kind::zero;
    } else if (cfg.driver_name == "constant") {
        spec.kind = DriverSpec::Kind::constant;
    } else if (cfg.driver_name == "linear_y") {
        spec.kind = DriverSpec::Kind::linear_y;
    } else if (cfg.driver_name == "jump_integral") {
        spec.kind = DriverSpec::Kind::jump_integral;
        const double scale = cfg.rho_scale;
        spec.rho = [scale](double x) { return scale / (1.0 + x * x); };
    } else {
        throw ConfigError("unknown driver '" + cfg.driver_name + "'");
    }
    return spec;
}

TerminalFunctional build_terminal_functional(const ExperimentConfig& cfg) {
    return make_terminal_functional(cfg.terminal_name, cfg.strike, cfg.shift);
}

}  // namespace bsdelta
