#include "wate/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace wate {

using json = nlohmann::ordered_json;

const char* version() { return "0.1.0"; }

std::string format_number(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

namespace {

// JSON has no encoding for non-finite numbers, so those become strings.
json json_number(double x) {
    if (std::isfinite(x)) return json(x);
    return json(format_number(x));
}

void header_lines(std::ostringstream& out, const std::string& config) {
    out << "# wate " << version() << '\n';
    out << "# config: " << config << '\n';
}

json json_preamble(const std::string& config) {
    json j;
    j["tool"] = "wate";
    j["version"] = version();
    j["config"] = config;
    return j;
}

json propensity_json(const ArmPropensitySummary& s) {
    json j;
    j["min"] = json_number(s.min);
    j["q1"] = json_number(s.q1);
    j["median"] = json_number(s.median);
    j["q3"] = json_number(s.q3);
    j["max"] = json_number(s.max);
    return j;
}

} // namespace

std::string render_csv(const EstimateReport& report) {
    std::ostringstream out;
    header_lines(out, report.config);

    out << "# results\n";
    out << "estimand,method,estimate,se,p_value,ci_lower,ci_upper,replicates_used,failures,error\n";
    for (const auto& block : report.estimands) {
        for (const auto& cell : block.methods) {
            out << block.estimand << ',' << cell.method << ',';
            if (!block.point_ok) {
                out << ",,,,,,," << block.point_error << '\n';
                continue;
            }
            out << format_number(block.tau_hat) << ',';
            if (!cell.ok) {
                out << ",,,,," << cell.failures << ',' << cell.error << '\n';
                continue;
            }
            out << format_number(cell.se) << ','
                << format_number(cell.p_value) << ','
                << format_number(cell.lower) << ','
                << format_number(cell.upper) << ','
                << cell.replicates_used << ','
                << cell.failures << ",\n";
        }
    }

    out << "# ess\n";
    out << "estimand,ess_treated,ess_control,ess_total\n";
    for (const auto& block : report.estimands) {
        if (!block.point_ok) continue;
        out << block.estimand << ','
            << format_number(block.ess_treated) << ','
            << format_number(block.ess_control) << ','
            << format_number(block.ess_treated + block.ess_control) << '\n';
    }

    out << "# balance\n";
    out << "estimand,covariate,asmd\n";
    for (const auto& block : report.estimands) {
        if (!block.point_ok) continue;
        for (std::size_t k = 0; k < block.asmd.size(); ++k) {
            out << block.estimand << ',' << report.covariates[k] << ','
                << format_number(block.asmd[k]) << '\n';
        }
    }

    out << "# propensity\n";
    out << "arm,n,min,q1,median,q3,max\n";
    const auto arm_row = [&](const char* name, int count, const ArmPropensitySummary& s) {
        out << name << ',' << count << ','
            << format_number(s.min) << ',' << format_number(s.q1) << ','
            << format_number(s.median) << ',' << format_number(s.q3) << ','
            << format_number(s.max) << '\n';
    };
    arm_row("treated", report.n_treated, report.ps_treated);
    arm_row("control", report.n - report.n_treated, report.ps_control);
    return out.str();
}

std::string render_json(const EstimateReport& report) {
    json j = json_preamble(report.config);
    j["n"] = report.n;
    j["n_treated"] = report.n_treated;
    j["alpha"] = report.alpha;

    json diag;
    diag["propensity"]["treated"] = propensity_json(report.ps_treated);
    diag["propensity"]["control"] = propensity_json(report.ps_control);
    json ess = json::object();
    json balance = json::object();
    for (const auto& block : report.estimands) {
        if (!block.point_ok) continue;
        json e;
        e["treated"] = json_number(block.ess_treated);
        e["control"] = json_number(block.ess_control);
        e["total"] = json_number(block.ess_treated + block.ess_control);
        ess[block.estimand] = std::move(e);
        json b = json::object();
        for (std::size_t k = 0; k < block.asmd.size(); ++k)
            b[report.covariates[k]] = json_number(block.asmd[k]);
        balance[block.estimand] = std::move(b);
    }
    diag["ess"] = std::move(ess);
    diag["balance"] = std::move(balance);
    j["diagnostics"] = std::move(diag);

    json results = json::object();
    for (const auto& block : report.estimands) {
        json r;
        if (!block.point_ok) {
            r["error"] = block.point_error;
            results[block.estimand] = std::move(r);
            continue;
        }
        r["estimate"] = json_number(block.tau_hat);
        json methods = json::object();
        for (const auto& cell : block.methods) {
            json m;
            if (!cell.ok) {
                m["error"] = cell.error;
                m["failures"] = cell.failures;
            } else {
                m["se"] = json_number(cell.se);
                m["p_value"] = json_number(cell.p_value);
                m["ci_lower"] = json_number(cell.lower);
                m["ci_upper"] = json_number(cell.upper);
                m["replicates_used"] = cell.replicates_used;
                m["failures"] = cell.failures;
            }
            methods[cell.method] = std::move(m);
        }
        r["methods"] = std::move(methods);
        results[block.estimand] = std::move(r);
    }
    j["results"] = std::move(results);
    return j.dump(2) + "\n";
}

std::string render_csv(const SimulateReport& report) {
    std::ostringstream out;
    header_lines(out, report.config);
    out << "model,n,effect,scenario,estimand,method,arbias_pct,rmse,esd,"
           "median_se,median_re,cp,failures,M,R,seed\n";
    for (const auto& row : report.rows) {
        out << row.model_id << ',' << row.n << ','
            << to_string(row.effect) << ',' << to_string(row.scenario) << ','
            << to_string(row.estimand) << ',' << row.method << ','
            << format_number(row.arbias_pct) << ','
            << format_number(row.rmse) << ','
            << format_number(row.esd) << ','
            << format_number(row.median_se) << ','
            << format_number(row.median_re) << ','
            << format_number(row.cp) << ','
            << row.failures << ','
            << row.m_replicates << ',' << row.r_replicates << ','
            << row.seed << '\n';
    }
    return out.str();
}

std::string render_json(const SimulateReport& report) {
    json j = json_preamble(report.config);
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["model"] = row.model_id;
        r["n"] = row.n;
        r["effect"] = to_string(row.effect);
        r["scenario"] = to_string(row.scenario);
        r["estimand"] = to_string(row.estimand);
        r["method"] = row.method;
        r["arbias_pct"] = json_number(row.arbias_pct);
        r["rmse"] = json_number(row.rmse);
        r["esd"] = json_number(row.esd);
        r["median_se"] = json_number(row.median_se);
        r["median_re"] = json_number(row.median_re);
        r["cp"] = json_number(row.cp);
        r["failures"] = row.failures;
        r["M"] = row.m_replicates;
        r["R"] = row.r_replicates;
        r["seed"] = row.seed;
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

std::string render_csv(const TruthReport& report) {
    std::ostringstream out;
    header_lines(out, report.config);
    out << "model,effect,scenario,estimand,kind,n_super,seed,value\n";
    for (const auto& row : report.rows) {
        out << row.model_id << ',' << row.effect << ',' << row.scenario << ','
            << row.estimand << ',' << row.kind << ',' << row.n_super << ','
            << row.seed << ',' << format_number(row.value) << '\n';
    }
    return out.str();
}

std::string render_json(const TruthReport& report) {
    json j = json_preamble(report.config);
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["model"] = row.model_id;
        r["effect"] = row.effect;
        if (!row.scenario.empty()) r["scenario"] = row.scenario;
        r["estimand"] = row.estimand;
        r["kind"] = row.kind;
        r["n_super"] = row.n_super;
        r["seed"] = row.seed;
        r["value"] = json_number(row.value);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j.dump(2) + "\n";
}

} // namespace wate
