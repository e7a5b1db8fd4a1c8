#include "wate/cli.hpp"

#include "wate/data.hpp"
#include "wate/error.hpp"
#include "wate/estimands.hpp"
#include "wate/estimator.hpp"
#include "wate/glm.hpp"
#include "wate/report.hpp"
#include "wate/simulation.hpp"
#include "wate/stats.hpp"
#include "wate/variance.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace wate {

namespace {

constexpr const char* all_methods = "boot1,boot2,wbexp1,wbrad1,wbexp2,wbrad2,sand";

struct Options {
    // estimate
    std::string input;
    std::string treatment_col = "treatment";
    std::string outcome_col = "outcome";
    std::string ps_covariates;
    std::string or_covariates;
    // simulate / truth
    int model = 0;
    std::string effect = "heterogeneous";
    std::string scenario;
    long long n = 0;
    int mc_reps = 500;
    // shared
    std::string estimands = "ate";
    std::string methods;
    int replicates = 200;
    double alpha = 0.05;
    std::uint64_t seed = 42;
    std::string scale = "sd";
    std::string perturbation = "exp1";
    std::string if_variant = "if1";
    std::string format = "csv";
    std::string out;
    int threads = 1;
};

enum class OutputFormat { csv, json };

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::istringstream in(text);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (token.empty())
            throw Error(ErrorCode::ConfigError, "empty item in list '" + text + "'");
        items.push_back(token);
    }
    if (items.empty())
        throw Error(ErrorCode::ConfigError, "empty list");
    return items;
}

std::vector<Estimand> parse_estimand_list(const std::string& text) {
    std::vector<Estimand> ests;
    for (const auto& token : split_list(text)) ests.push_back(parse_estimand(token));
    return ests;
}

Perturbation parse_perturbation(const std::string& text) {
    if (text == "exp1") return Perturbation::exp1;
    if (text == "rademacher") return Perturbation::rademacher;
    throw Error(ErrorCode::ConfigError,
                "unknown perturbation '" + text + "' (expected exp1 or rademacher)");
}

IfVariant parse_if_variant(const std::string& text) {
    if (text == "if1") return IfVariant::if_i;
    if (text == "if2") return IfVariant::if_ii;
    throw Error(ErrorCode::ConfigError,
                "unknown influence variant '" + text + "' (expected if1 or if2)");
}

ScaleEstimator parse_scale(const std::string& text) {
    if (text == "sd") return ScaleEstimator::sd;
    if (text == "iqr") return ScaleEstimator::iqr;
    throw Error(ErrorCode::ConfigError, "unknown scale '" + text + "' (expected sd or iqr)");
}

OutputFormat parse_format(const std::string& text) {
    if (text == "csv") return OutputFormat::csv;
    if (text == "json") return OutputFormat::json;
    throw Error(ErrorCode::ConfigError, "unknown format '" + text + "' (expected csv or json)");
}

// "wb" picks up --perturbation and --if-variant; the named variants fix both.
std::vector<MethodSpec> parse_method_list(const Options& o) {
    const std::string& text = o.methods.empty() ? all_methods : o.methods;
    std::vector<MethodSpec> specs;
    for (const auto& token : split_list(text)) {
        if (token == "wb") {
            MethodSpec spec;
            spec.method = Method::wb;
            spec.wb.perturbation = parse_perturbation(o.perturbation);
            spec.wb.if_variant = parse_if_variant(o.if_variant);
            specs.push_back(spec);
        } else {
            specs.push_back(parse_method(token));
        }
    }
    return specs;
}

std::string estimand_list_string(const std::vector<Estimand>& ests) {
    std::string s;
    for (const auto& est : ests) {
        if (!s.empty()) s += ',';
        s += to_string(est);
    }
    return s;
}

std::string method_list_string(const std::vector<MethodSpec>& specs) {
    std::string s;
    for (const auto& spec : specs) {
        if (!s.empty()) s += ',';
        s += method_label(spec);
    }
    return s;
}

std::vector<int> resolve_covariates(const Dataset& ds, const std::string& list) {
    const auto& names = ds.covariate_names();
    std::vector<int> indices;
    if (list.empty()) {
        indices.resize(names.size());
        std::iota(indices.begin(), indices.end(), 0);
        return indices;
    }
    for (const auto& token : split_list(list)) {
        auto it = std::find(names.begin(), names.end(), token);
        if (it == names.end())
            throw Error(ErrorCode::ConfigError, "unknown covariate '" + token + "'");
        indices.push_back(static_cast<int>(it - names.begin()));
    }
    return indices;
}

std::string covariate_list_string(const Dataset& ds, const std::vector<int>& indices) {
    std::string s;
    for (int k : indices) {
        if (!s.empty()) s += ',';
        s += ds.covariate_names()[static_cast<std::size_t>(k)];
    }
    return s;
}

void validate_shared(const Options& o, const std::vector<MethodSpec>& methods) {
    if (!(o.alpha > 0.0 && o.alpha < 1.0))
        throw Error(ErrorCode::ConfigError, "alpha must be in (0, 1)");
    if (o.threads < 1)
        throw Error(ErrorCode::ConfigError, "threads must be at least 1");
    const bool resampling = std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) {
        return m.method != Method::sand;
    });
    if (resampling && o.replicates < 2)
        throw Error(ErrorCode::ConfigError,
                    "replicates must be at least 2 for bootstrap and wild bootstrap methods");
}

// The recorded configuration excludes --out and --threads: neither changes
// any result, and reports must match byte for byte across those settings.
void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f)
        throw Error(ErrorCode::ConfigError, "cannot open output file '" + out_path + "'");
    f << text;
    f.flush();
    if (!f.good())
        throw Error(ErrorCode::ConfigError, "failed writing output file '" + out_path + "'");
}

ArmPropensitySummary summarize_propensity(std::vector<double> values) {
    ArmPropensitySummary s;
    if (values.empty()) {
        s.min = s.q1 = s.median = s.q3 = s.max = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    s.min = quantile_type7(values, 0.0);
    s.q1 = quantile_type7(values, 0.25);
    s.median = quantile_type7(values, 0.5);
    s.q3 = quantile_type7(values, 0.75);
    s.max = quantile_type7(values, 1.0);
    return s;
}

int cmd_estimate(const Options& o) {
    const auto ests = parse_estimand_list(o.estimands);
    const auto methods = parse_method_list(o);
    validate_shared(o, methods);
    const ScaleEstimator scale = parse_scale(o.scale);
    const OutputFormat format = parse_format(o.format);

    const Dataset ds = load_csv(o.input, o.treatment_col, o.outcome_col);
    const DesignSpec ps_spec{resolve_covariates(ds, o.ps_covariates), true};
    const DesignSpec or_spec{resolve_covariates(ds, o.or_covariates), true};

    EstimateReport report;
    {
        std::ostringstream cfg;
        cfg << "estimate --input " << o.input
            << " --treatment-col " << o.treatment_col
            << " --outcome-col " << o.outcome_col
            << " --ps-covariates " << covariate_list_string(ds, ps_spec.column_indices)
            << " --or-covariates " << covariate_list_string(ds, or_spec.column_indices)
            << " --estimands " << estimand_list_string(ests)
            << " --methods " << method_list_string(methods)
            << " --replicates " << o.replicates
            << " --alpha " << format_number(o.alpha)
            << " --seed " << o.seed
            << " --scale " << o.scale
            << " --format " << o.format;
        report.config = cfg.str();
    }
    report.n = ds.n();
    report.n_treated = ds.n_treated();
    report.alpha = o.alpha;
    report.covariates = ds.covariate_names();

    std::optional<LogisticFit> ps;
    std::string ps_error;
    try {
        const Eigen::MatrixXd v = design_matrix(ds, ps_spec);
        const Eigen::Map<const Eigen::VectorXi> z(ds.z().data(), ds.n());
        ps.emplace(fit_logistic(v, z));
    } catch (const Error& e) {
        ps_error = error_name(e.code());
    }

    struct Block {
        Estimand est;
        bool point_ok = false;
        std::string point_error;
        PointEstimate point{};
        FittedNuisances nus{};
        std::vector<MethodCell> cells;
        double ess_treated = 0.0, ess_control = 0.0;
        std::vector<double> asmd;
    };
    std::vector<Block> blocks;
    blocks.reserve(ests.size());
    for (const auto& est : ests) {
        Block b;
        b.est = est;
        if (!ps) {
            b.point_error = ps_error;
        } else {
            try {
                b.nus = fit_nuisances_given_propensity(ds, ps->fitted, or_spec, est);
                b.nus.ps_fit = *ps;
                b.point = augmented_wate(ds, b.nus, est);
                b.point_ok = true;
            } catch (const Error& e) {
                b.point_error = error_name(e.code());
            }
        }
        blocks.push_back(std::move(b));
    }

    std::vector<Estimand> live_ests;
    std::vector<std::size_t> live_index;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].point_ok) {
            live_ests.push_back(blocks[i].est);
            live_index.push_back(i);
        }
    }

    const auto success_cell = [&](const Block& b, const MethodSpec& spec,
                                  const VarianceEstimate& ve) {
        MethodCell c;
        c.method = method_label(spec);
        c.ok = true;
        c.se = ve.se;
        c.p_value = two_sided_p_value(b.point.tau_hat / ve.se);
        const WaldInterval ci = wald_ci(b.point.tau_hat, ve, o.alpha);
        c.lower = ci.lower;
        c.upper = ci.upper;
        c.replicates_used = ve.replicates_used;
        c.failures = ve.failures;
        return c;
    };
    const auto failure_cell = [](const MethodSpec& spec, const std::string& error, int failures) {
        MethodCell c;
        c.method = method_label(spec);
        c.ok = false;
        c.error = error;
        c.failures = failures;
        return c;
    };

    // Method cell j draws from (seed, j); the bootstrap methods run once over
    // shared resamples for all estimands that produced a point estimate.
    for (std::size_t j = 0; j < methods.size(); ++j) {
        const MethodSpec& spec = methods[j];
        const std::uint64_t cell_seed = mix_seed(o.seed, j);
        switch (spec.method) {
            case Method::sand:
                for (std::size_t i : live_index) {
                    Block& b = blocks[i];
                    try {
                        const ThetaAug theta = theta_from_nuisances(ds, b.nus, b.est);
                        const VarianceEstimate ve =
                            sandwich_variance(ds, theta, ps_spec, or_spec, b.est);
                        b.cells.push_back(success_cell(b, spec, ve));
                    } catch (const Error& e) {
                        b.cells.push_back(failure_cell(spec, error_name(e.code()), 0));
                    }
                }
                break;
            case Method::boot_i:
            case Method::boot_ii: {
                if (live_ests.empty()) break;
                const auto results =
                    spec.method == Method::boot_i
                        ? bootstrap_standard_multi(ds, ps_spec, or_spec, live_ests,
                                                   o.replicates, cell_seed)
                        : bootstrap_post_weighting_multi(ds, ps->fitted, or_spec, live_ests,
                                                         o.replicates, cell_seed, scale);
                for (std::size_t k = 0; k < results.size(); ++k) {
                    Block& b = blocks[live_index[k]];
                    const auto& res = results[k];
                    if (res.ok)
                        b.cells.push_back(success_cell(b, spec, res.estimate));
                    else
                        b.cells.push_back(failure_cell(spec, error_name(res.error),
                                                       res.estimate.failures));
                }
                break;
            }
            case Method::wb:
                for (std::size_t i : live_index) {
                    Block& b = blocks[i];
                    try {
                        const InfluenceVector phi =
                            influence_vector(ds, b.nus, b.est, b.point.tau_hat,
                                             spec.wb.if_variant);
                        const VarianceEstimate ve =
                            wild_bootstrap(phi, b.point.tau_hat, o.replicates, cell_seed,
                                           spec.wb.perturbation, scale);
                        b.cells.push_back(success_cell(b, spec, ve));
                    } catch (const Error& e) {
                        b.cells.push_back(failure_cell(spec, error_name(e.code()), 0));
                    }
                }
                break;
        }
    }

    for (std::size_t i : live_index) {
        Block& b = blocks[i];
        std::vector<double> w_treated, w_control;
        for (int r = 0; r < ds.n(); ++r) {
            if (ds.z()[static_cast<std::size_t>(r)] == 1)
                w_treated.push_back(b.nus.w1(r));
            else
                w_control.push_back(b.nus.w0(r));
        }
        b.ess_treated = effective_sample_size(
            Eigen::Map<const Eigen::VectorXd>(w_treated.data(),
                                              static_cast<Eigen::Index>(w_treated.size())));
        b.ess_control = effective_sample_size(
            Eigen::Map<const Eigen::VectorXd>(w_control.data(),
                                              static_cast<Eigen::Index>(w_control.size())));
        const Eigen::VectorXd asmd = weighted_asmd(ds, b.nus.w1, b.nus.w0);
        b.asmd.assign(asmd.data(), asmd.data() + asmd.size());
    }

    std::vector<double> e_treated, e_control;
    if (ps) {
        for (int r = 0; r < ds.n(); ++r) {
            if (ds.z()[static_cast<std::size_t>(r)] == 1)
                e_treated.push_back(ps->fitted(r));
            else
                e_control.push_back(ps->fitted(r));
        }
    }
    report.ps_treated = summarize_propensity(std::move(e_treated));
    report.ps_control = summarize_propensity(std::move(e_control));

    for (auto& b : blocks) {
        EstimandBlock rb;
        rb.estimand = to_string(b.est);
        rb.point_ok = b.point_ok;
        rb.point_error = b.point_error;
        rb.tau_hat = b.point.tau_hat;
        rb.ess_treated = b.ess_treated;
        rb.ess_control = b.ess_control;
        rb.asmd = std::move(b.asmd);
        if (b.point_ok) {
            rb.methods = std::move(b.cells);
        } else {
            for (const auto& spec : methods)
                rb.methods.push_back(failure_cell(spec, b.point_error, 0));
        }
        report.estimands.push_back(std::move(rb));
    }

    write_output(format == OutputFormat::json ? render_json(report) : render_csv(report), o.out);
    return 0;
}

int cmd_simulate(const Options& o) {
    MonteCarloConfig cfg;
    cfg.model = SimModel::from_id(o.model);
    if (o.n < 0 || o.n > (1 << 24))
        throw Error(ErrorCode::ConfigError, "n out of range");
    cfg.n = static_cast<int>(o.n);
    cfg.effect = parse_effect(o.effect);
    cfg.scenario = parse_scenario(o.scenario.empty() ? "a1" : o.scenario);
    cfg.estimands = parse_estimand_list(o.estimands);
    cfg.methods = parse_method_list(o);
    cfg.m_replicates = o.mc_reps;
    cfg.r_replicates = o.replicates;
    cfg.alpha = o.alpha;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.scale = parse_scale(o.scale);
    validate_shared(o, cfg.methods);
    const OutputFormat format = parse_format(o.format);

    SimulateReport report;
    {
        std::ostringstream cfgline;
        cfgline << "simulate --model " << cfg.model.model_id
                << " --n " << (cfg.n > 0 ? cfg.n : cfg.model.n_default)
                << " --effect " << to_string(cfg.effect)
                << " --scenario " << to_string(cfg.scenario)
                << " --estimands " << estimand_list_string(cfg.estimands)
                << " --methods " << method_list_string(cfg.methods)
                << " --replicates " << cfg.r_replicates
                << " --mc-reps " << cfg.m_replicates
                << " --alpha " << format_number(cfg.alpha)
                << " --seed " << cfg.seed
                << " --scale " << o.scale
                << " --format " << o.format;
        report.config = cfgline.str();
    }
    report.rows = run_monte_carlo(cfg);

    write_output(format == OutputFormat::json ? render_json(report) : render_csv(report), o.out);
    return 0;
}

int cmd_truth(const Options& o) {
    const SimModel model = SimModel::from_id(o.model);
    const EffectType effect = parse_effect(o.effect);
    const auto ests = parse_estimand_list(o.estimands);
    if (o.n < 0)
        throw Error(ErrorCode::ConfigError, "n out of range");
    const std::size_t n_super = o.n == 0 ? 1000000u : static_cast<std::size_t>(o.n);
    const OutputFormat format = parse_format(o.format);
    std::optional<Scenario> scenario;
    if (!o.scenario.empty()) scenario = parse_scenario(o.scenario);

    TruthReport report;
    {
        std::ostringstream cfg;
        cfg << "truth --model " << model.model_id
            << " --effect " << to_string(effect);
        if (scenario) cfg << " --scenario " << to_string(*scenario);
        cfg << " --estimands " << estimand_list_string(ests)
            << " --n " << n_super
            << " --seed " << o.seed
            << " --format " << o.format;
        report.config = cfg.str();
    }

    for (const auto& est : ests) {
        TruthRow row;
        row.model_id = model.model_id;
        row.effect = to_string(effect);
        row.estimand = to_string(est);
        row.kind = "true";
        row.n_super = n_super;
        row.seed = o.seed;
        row.value = true_wate(model, effect, est, n_super, o.seed);
        report.rows.push_back(std::move(row));
    }
    if (scenario) {
        for (const auto& est : ests) {
            TruthRow row;
            row.model_id = model.model_id;
            row.effect = to_string(effect);
            row.scenario = to_string(*scenario);
            row.estimand = to_string(est);
            row.kind = "pseudo";
            row.n_super = n_super;
            row.seed = o.seed;
            row.value = pseudo_true_wate(model, effect, est, *scenario, n_super, o.seed);
            report.rows.push_back(std::move(row));
        }
    }

    write_output(format == OutputFormat::json ? render_json(report) : render_csv(report), o.out);
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    Options o;
    CLI::App app{"Augmented estimators for weighted average treatment effects"};
    app.set_version_flag("--version", std::string("wate ") + version());
    app.require_subcommand(1);

    const auto add_shared = [&](CLI::App* cmd, bool with_resampling) {
        cmd->add_option("--estimands", o.estimands,
                        "Comma-separated estimands: ate, att, atc, ato, atm, aten, trim:<alpha>");
        cmd->add_option("--seed", o.seed, "Seed for all randomized steps");
        cmd->add_option("--format", o.format, "Output format: csv or json");
        cmd->add_option("--out", o.out, "Output file (default: stdout)");
        if (!with_resampling) return;
        cmd->add_option("--methods", o.methods,
                        "Comma-separated uncertainty methods: boot1, boot2, wbexp1, wbrad1, "
                        "wbexp2, wbrad2, sand, or wb (configured by --perturbation/--if-variant)");
        cmd->add_option("--replicates", o.replicates, "Bootstrap replicates per cell");
        cmd->add_option("--alpha", o.alpha, "Two-sided confidence level is 1 - alpha");
        cmd->add_option("--scale", o.scale,
                        "Replicate spread estimator for boot2 and wild bootstrap: sd or iqr");
        cmd->add_option("--perturbation", o.perturbation,
                        "Wild bootstrap multiplier for the generic wb method: exp1 or rademacher");
        cmd->add_option("--if-variant", o.if_variant,
                        "Influence function for the generic wb method: if1 or if2");
        cmd->add_option("--threads", o.threads, "Worker threads for Monte Carlo replicates");
    };

    CLI::App* est = app.add_subcommand("estimate",
                                       "Estimate weighted treatment effects from a CSV dataset");
    est->add_option("--input", o.input, "Input CSV file")->required();
    est->add_option("--treatment-col", o.treatment_col, "Name of the 0/1 treatment column");
    est->add_option("--outcome-col", o.outcome_col, "Name of the outcome column");
    est->add_option("--ps-covariates", o.ps_covariates,
                    "Comma-separated covariates for the propensity model (default: all)");
    est->add_option("--or-covariates", o.or_covariates,
                    "Comma-separated covariates for the outcome models (default: all)");
    add_shared(est, true);

    CLI::App* sim = app.add_subcommand("simulate", "Run a Monte Carlo study of the estimators");
    sim->add_option("--model", o.model, "Treatment prevalence model, 1 to 5")->required();
    sim->add_option("--n", o.n, "Sample size per replicate (default: model-specific)");
    sim->add_option("--effect", o.effect, "Treatment effect: homogeneous or heterogeneous");
    sim->add_option("--scenario", o.scenario,
                    "Model specification scenario a1, a2, a3, or a4 (default: a1)");
    sim->add_option("--mc-reps", o.mc_reps, "Monte Carlo replicates");
    add_shared(sim, true);

    CLI::App* tru = app.add_subcommand("truth",
                                       "Compute weighted effects over a simulated super-population");
    tru->add_option("--model", o.model, "Treatment prevalence model, 1 to 5")->required();
    tru->add_option("--effect", o.effect, "Treatment effect: homogeneous or heterogeneous");
    tru->add_option("--scenario", o.scenario,
                    "Also report the misspecified-model limits under this scenario");
    tru->add_option("--n", o.n, "Super-population size (default: 1000000)");
    add_shared(tru, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (est->parsed()) return cmd_estimate(o);
        if (sim->parsed()) return cmd_simulate(o);
        return cmd_truth(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace wate
