#include "bsdelta/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bsdelta/errors.hpp"
#include "json.hpp"

namespace bsdelta {

namespace {

using nlohmann::json;

std::string format_seconds(double s, bool include_timings) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", include_timings ? s : 0.0);
    return buf;
}

json config_echo_json(const std::map<std::string, std::string>& echo) {
    json j = json::object();
    for (const auto& [k, v] : echo) j[k] = v;
    return j;
}

std::map<std::string, std::string> config_echo_from_json(const json& j) {
    std::map<std::string, std::string> echo;
    for (auto it = j.begin(); it != j.end(); ++it) echo[it.key()] = it.value().get<std::string>();
    return echo;
}

json parse_checked(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError(std::string("malformed ") + what + " JSON");
    return j;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string convergence_csv(const ConvergenceReport& r, bool include_timings) {
    std::ostringstream os;
    os << "N,delta,y0_scheme,y0_oracle,oracle_stderr,abs_error,p0,xx0_ratio,nodes,seconds\n";
    for (const auto& row : r.rows) {
        os << row.steps << ',' << format_double(row.delta) << ',' << format_double(row.y0_scheme)
           << ',' << format_double(row.y0_oracle) << ',' << format_double(row.oracle_stderr)
           << ',' << format_double(row.abs_error) << ',' << format_double(row.p0) << ','
           << format_double(row.xx0_ratio) << ',' << row.nodes << ','
           << format_seconds(row.seconds, include_timings) << '\n';
    }
    return os.str();
}

std::string convergence_json(const ConvergenceReport& r, bool include_timings) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"steps", row.steps},
                        {"delta", row.delta},
                        {"y0_scheme", row.y0_scheme},
                        {"y0_oracle", row.y0_oracle},
                        {"oracle_stderr", row.oracle_stderr},
                        {"abs_error", row.abs_error},
                        {"p0", row.p0},
                        {"xx0_ratio", row.xx0_ratio},
                        {"nodes", row.nodes},
                        {"seconds", include_timings ? row.seconds : 0.0}});
    }
    json j = {{"kind", "convergence"},
              {"version", r.version},
              {"seed", r.seed},
              {"config", config_echo_json(r.config_echo)},
              {"oracle_method", r.oracle_method},
              {"oracle_samples", r.oracle_samples},
              {"rows", rows},
              {"has_oracle", r.has_oracle},
              {"has_verdict", r.has_verdict},
              {"pass", r.pass},
              {"verdict_detail", r.verdict_detail}};
    return j.dump(2) + "\n";
}

ConvergenceReport convergence_from_json(const std::string& text) {
    json j = parse_checked(text, "convergence report");
    try {
    ConvergenceReport r;
    r.version = j.at("version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_echo = config_echo_from_json(j.at("config"));
    r.oracle_method = j.at("oracle_method").get<std::string>();
    r.oracle_samples = j.at("oracle_samples").get<std::uint64_t>();
    for (const auto& jr : j.at("rows")) {
        ConvergenceRow row;
        row.steps = jr.at("steps").get<int>();
        row.delta = jr.at("delta").get<double>();
        row.y0_scheme = jr.at("y0_scheme").get<double>();
        row.y0_oracle = jr.at("y0_oracle").get<double>();
        row.oracle_stderr = jr.at("oracle_stderr").get<double>();
        row.abs_error = jr.at("abs_error").get<double>();
        row.p0 = jr.at("p0").get<double>();
        row.xx0_ratio = jr.at("xx0_ratio").get<double>();
        row.nodes = jr.at("nodes").get<std::uint64_t>();
        row.seconds = jr.at("seconds").get<double>();
        r.rows.push_back(row);
    }
    r.has_oracle = j.at("has_oracle").get<bool>();
    r.has_verdict = j.at("has_verdict").get<bool>();
    r.pass = j.at("pass").get<bool>();
    r.verdict_detail = j.at("verdict_detail").get<std::string>();
    return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed convergence report: ") +
                          e.what());
    }
}

std::string stability_csv(const StabilityReport& r) {
    std::ostringstream os;
    os << "pair_id,N,lhs_max_dy2,lhs_z,lhs_m,lhs_jump,lhs_total,rhs_total,ratio,lemma_num,"
          "lemma_den\n";
    for (const auto& row : r.rows) {
        os << row.pair_id << ',' << row.steps << ',' << format_double(row.lhs_max_dy2) << ','
           << format_double(row.lhs_z) << ',' << format_double(row.lhs_m) << ','
           << format_double(row.lhs_jump) << ',' << format_double(row.lhs_total) << ','
           << format_double(row.rhs_total) << ',' << format_double(row.ratio) << ','
           << format_double(row.lemma_num) << ',' << format_double(row.lemma_den) << '\n';
    }
    return os.str();
}

std::string stability_json(const StabilityReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"pair_id", row.pair_id},
                        {"steps", row.steps},
                        {"lhs_max_dy2", row.lhs_max_dy2},
                        {"lhs_z", row.lhs_z},
                        {"lhs_m", row.lhs_m},
                        {"lhs_jump", row.lhs_jump},
                        {"lhs_total", row.lhs_total},
                        {"rhs_total", row.rhs_total},
                        {"ratio", row.ratio},
                        {"lemma_num", row.lemma_num},
                        {"lemma_den", row.lemma_den}});
    }
    json j = {{"kind", "stability"},
              {"version", r.version},
              {"seed", r.seed},
              {"config", config_echo_json(r.config_echo)},
              {"rows", rows},
              {"max_ratio", r.max_ratio},
              {"pass", r.pass},
              {"verdict_detail", r.verdict_detail}};
    return j.dump(2) + "\n";
}

StabilityReport stability_from_json(const std::string& text) {
    json j = parse_checked(text, "stability report");
    try {
    StabilityReport r;
    r.version = j.at("version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_echo = config_echo_from_json(j.at("config"));
    for (const auto& jr : j.at("rows")) {
        StabilityRow row;
        row.pair_id = jr.at("pair_id").get<int>();
        row.steps = jr.at("steps").get<int>();
        row.lhs_max_dy2 = jr.at("lhs_max_dy2").get<double>();
        row.lhs_z = jr.at("lhs_z").get<double>();
        row.lhs_m = jr.at("lhs_m").get<double>();
        row.lhs_jump = jr.at("lhs_jump").get<double>();
        row.lhs_total = jr.at("lhs_total").get<double>();
        row.rhs_total = jr.at("rhs_total").get<double>();
        row.ratio = jr.at("ratio").get<double>();
        row.lemma_num = jr.at("lemma_num").get<double>();
        row.lemma_den = jr.at("lemma_den").get<double>();
        r.rows.push_back(row);
    }
    r.max_ratio = j.at("max_ratio").get<double>();
    r.pass = j.at("pass").get<bool>();
    r.verdict_detail = j.at("verdict_detail").get<std::string>();
    return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed stability report: ") +
                          e.what());
    }
}

std::string validation_csv(const ValidationReport& r) {
    std::ostringstream os;
    os << "check,residual,status,detail\n";
    for (const auto& row : r.rows) {
        std::string detail = row.detail;
        for (auto& c : detail)
            if (c == ',') c = ';';
        os << row.check << ',' << format_double(row.residual) << ',' << row.status << ','
           << detail << '\n';
    }
    return os.str();
}

std::string validation_json(const ValidationReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"check", row.check},
                        {"residual", row.residual},
                        {"status", row.status},
                        {"detail", row.detail}});
    }
    json j = {{"kind", "validation"},
              {"version", r.version},
              {"seed", r.seed},
              {"config", config_echo_json(r.config_echo)},
              {"rows", rows},
              {"pass", r.pass}};
    return j.dump(2) + "\n";
}

ValidationReport validation_from_json(const std::string& text) {
    json j = parse_checked(text, "validation report");
    try {
    ValidationReport r;
    r.version = j.at("version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_echo = config_echo_from_json(j.at("config"));
    for (const auto& jr : j.at("rows")) {
        ValidationRow row;
        row.check = jr.at("check").get<std::string>();
        row.residual = jr.at("residual").get<double>();
        row.status = jr.at("status").get<std::string>();
        row.detail = jr.at("detail").get<std::string>();
        r.rows.push_back(row);
    }
    r.pass = j.at("pass").get<bool>();
    return r;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed validation report: ") +
                          e.what());
    }
}

}  // namespace bsdelta
