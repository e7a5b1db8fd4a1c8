#include "wate/simulation.hpp"

#include "wate/estimator.hpp"
#include "wate/glm.hpp"
#include "wate/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace wate {

namespace {

// Truths are drawn from their own fixed stream so cached values agree across
// runs regardless of the master seed.
constexpr std::uint64_t truth_seed = 0x5eed;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

struct CovariateRow {
    double x[7];
    double true_e;
};

// Draw order per row is fixed: u(x4), u(x3), n1, n2. Callers draw anything
// else they need afterwards.
CovariateRow draw_covariates(Rng& rng, const SimModel& model) {
    CovariateRow row;
    const double x4 = rng.bernoulli(0.5);
    const double x3 = rng.bernoulli(0.2 * x4 + 0.4);
    const double n1 = rng.normal();
    const double n2 = rng.normal();

    const double mu1 = -x3 + x4 + 0.5 * x3 * x4;
    const double mu2 = x3 - x4 + x3 * x4;
    double x1, x2;
    if (x3 == 1.0) {
        // chol([[1, .5], [.5, 1]])
        x1 = mu1 + n1;
        x2 = mu2 + 0.5 * n1 + std::sqrt(0.75) * n2;
    } else {
        // chol([[2, .25], [.25, 2]])
        x1 = mu1 + std::sqrt(2.0) * n1;
        x2 = mu2 + 0.25 / std::sqrt(2.0) * n1 + std::sqrt(2.0 - 0.03125) * n2;
    }

    row.x[0] = x1;
    row.x[1] = x2;
    row.x[2] = x3;
    row.x[3] = x4;
    row.x[4] = x1 * x1;
    row.x[5] = x1 * x2;
    row.x[6] = x2 * x2;

    double eta = model.beta[0];
    for (int j = 0; j < 7; ++j) eta += model.beta[j + 1] * row.x[j];
    row.true_e = std::clamp(expit(eta), 1e-12, 1.0 - 1e-12);
    return row;
}

double treatment_effect(EffectType effect, const CovariateRow& row) {
    if (effect == EffectType::homogeneous) return 4.0;
    const double s = row.x[0] + row.x[1];
    return 4.0 + 3.0 * s * s + row.x[0] * row.x[2];
}

double outcome_base(const CovariateRow& row) {
    const double s = row.x[0] + row.x[1];
    return 0.5 + row.x[0] + 0.6 * row.x[1] + 2.2 * row.x[2] - 1.2 * row.x[3] + s * s;
}

} // namespace

SimModel SimModel::from_id(int model_id) {
    SimModel model;
    model.model_id = model_id;
    switch (model_id) {
        case 1:
        case 2:
        case 3:
        case 5: {
            const double intercepts[] = {-2.17, -0.78, 0.98};
            const double b0 = model_id == 5 ? intercepts[2] : intercepts[model_id - 1];
            model.beta << b0, 0.3, 0.4, 0.4, 0.4, -0.1, -0.1, 0.1;
            model.n_default = model_id == 5 ? 50 : 1000;
            return model;
        }
        case 4:
            model.beta << 0.2, 1.0, -0.9, -0.9, 0.9, 0.15, 0.15, -0.2;
            model.n_default = 1000;
            return model;
        default:
            throw Error(ErrorCode::ConfigError,
                        "model must be 1..5, got " + std::to_string(model_id));
    }
}

EffectType parse_effect(const std::string& text) {
    if (text == "homogeneous") return EffectType::homogeneous;
    if (text == "heterogeneous") return EffectType::heterogeneous;
    throw Error(ErrorCode::ConfigError, "unknown effect type '" + text + "'");
}

Scenario parse_scenario(const std::string& text) {
    if (text == "a1") return Scenario::a1;
    if (text == "a2") return Scenario::a2;
    if (text == "a3") return Scenario::a3;
    if (text == "a4") return Scenario::a4;
    throw Error(ErrorCode::ConfigError, "unknown scenario '" + text + "'");
}

std::string to_string(EffectType effect) {
    return effect == EffectType::homogeneous ? "homogeneous" : "heterogeneous";
}

std::string to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::a1: return "a1";
        case Scenario::a2: return "a2";
        case Scenario::a3: return "a3";
        case Scenario::a4: return "a4";
    }
    return "?";
}

DesignSpec scenario_ps_spec(Scenario scenario) {
    DesignSpec spec;
    if (scenario == Scenario::a1 || scenario == Scenario::a2)
        spec.column_indices = {0, 1, 2, 3, 4, 5, 6};
    else
        spec.column_indices = {0, 1, 2, 3};
    return spec;
}

DesignSpec scenario_or_spec(Scenario scenario) {
    DesignSpec spec;
    if (scenario == Scenario::a1 || scenario == Scenario::a3)
        spec.column_indices = {0, 1, 2, 3, 4, 5, 6};
    else
        spec.column_indices = {0, 1, 2, 3};
    return spec;
}

SyntheticDataset generate(const SimModel& model, int n, EffectType effect, std::uint64_t seed) {
    if (n < 2) throw Error(ErrorCode::ConfigError, "need at least 2 observations");

    Rng rng(seed);
    Eigen::MatrixXd x(n, 7);
    Eigen::VectorXd y(n), true_e(n), y0(n), y1(n), delta(n);
    std::vector<int> z(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        const CovariateRow row = draw_covariates(rng, model);
        const double eps0 = rng.normal();
        const double eps1 = rng.normal();
        const int zi = rng.bernoulli(row.true_e);

        for (int j = 0; j < 7; ++j) x(i, j) = row.x[j];
        const double base = outcome_base(row);
        const double d = treatment_effect(effect, row);
        true_e[i] = row.true_e;
        delta[i] = d;
        y0[i] = base + eps0;
        y1[i] = base + d + eps1;
        z[static_cast<std::size_t>(i)] = zi;
        y[i] = zi == 1 ? y1[i] : y0[i];
    }

    SyntheticDataset sds{Dataset(std::move(z), std::move(y), std::move(x),
                                 {"x1", "x2", "x3", "x4", "x5", "x6", "x7"}),
                         std::move(true_e), std::move(y0), std::move(y1), std::move(delta)};
    return sds;
}

double true_wate(const SimModel& model, EffectType effect, const Estimand& est,
                 std::size_t n_super, std::uint64_t seed) {
    if (n_super < 100000)
        throw Error(ErrorCode::ConfigError, "truth computation needs at least 1e5 draws");

    Rng rng(seed);
    double sum_g = 0.0, sum_gd = 0.0;
    for (std::size_t i = 0; i < n_super; ++i) {
        const CovariateRow row = draw_covariates(rng, model);
        const double g = tilt(est, row.true_e);
        sum_g += g;
        sum_gd += g * treatment_effect(effect, row);
    }
    if (sum_g == 0.0)
        throw Error(ErrorCode::DegenerateWeights, "tilting function vanished on the whole draw");
    return sum_gd / sum_g;
}

double pseudo_true_wate(const SimModel& model, EffectType effect, const Estimand& est,
                        Scenario scenario, std::size_t n_super, std::uint64_t seed) {
    if (n_super < 100000)
        throw Error(ErrorCode::ConfigError, "truth computation needs at least 1e5 draws");

    const SyntheticDataset sds = generate(model, static_cast<int>(n_super), effect, seed);
    const FittedNuisances nus = fit_nuisances(sds.data, scenario_ps_spec(scenario),
                                              scenario_or_spec(scenario), est);
    const double sum_g = nus.g.sum();
    if (sum_g == 0.0)
        throw Error(ErrorCode::DegenerateWeights, "tilting function vanished on the whole draw");
    return nus.g.dot(nus.m1 - nus.m0) / sum_g;
}

namespace {

ReplicateOutcome run_replicate(const MonteCarloConfig& cfg, int n, int m,
                               const DesignSpec& ps_spec, const DesignSpec& or_spec) {
    const std::uint64_t rep_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(m));
    const SyntheticDataset sds = generate(cfg.model, n, cfg.effect, rep_seed);
    const Dataset& ds = sds.data;

    const std::size_t n_est = cfg.estimands.size();
    const std::size_t n_meth = cfg.methods.size();
    ReplicateOutcome out;
    out.estimands.resize(n_est);
    for (auto& eo : out.estimands) eo.methods.resize(n_meth);

    bool ps_ok = true;
    ErrorCode ps_error = ErrorCode::ConfigError;
    LogisticFit ps;
    try {
        const Eigen::Map<const Eigen::VectorXi> z(ds.z().data(),
                                                  static_cast<Eigen::Index>(ds.z().size()));
        ps = fit_logistic(design_matrix(ds, ps_spec), z);
    } catch (const Error& err) {
        ps_ok = false;
        ps_error = err.code();
    }

    std::vector<FittedNuisances> nus(n_est);
    for (std::size_t k = 0; k < n_est; ++k) {
        auto& eo = out.estimands[k];
        if (!ps_ok) {
            eo.point_error = ps_error;
            continue;
        }
        try {
            nus[k] = fit_nuisances_given_propensity(ds, ps.fitted, or_spec, cfg.estimands[k]);
            nus[k].ps_fit = ps;
            eo.tau_hat = augmented_wate(ds, nus[k], cfg.estimands[k]).tau_hat;
            eo.point_ok = true;
        } catch (const Error& err) {
            eo.point_error = err.code();
        }
    }

    bool any_point_ok = false;
    for (const auto& eo : out.estimands) any_point_ok |= eo.point_ok;

    for (std::size_t j = 0; j < n_meth; ++j) {
        const MethodSpec& ms = cfg.methods[j];
        const std::uint64_t cell_seed = mix_seed(rep_seed, static_cast<std::uint64_t>(j));

        // a failed point estimate fails every method cell of that estimand
        for (std::size_t k = 0; k < n_est; ++k)
            if (!out.estimands[k].point_ok)
                out.estimands[k].methods[j].error = out.estimands[k].point_error;
        if (!any_point_ok) continue;

        auto record = [&](std::size_t k, const VarianceEstimate& ve) {
            auto& mo = out.estimands[k].methods[j];
            const WaldInterval ci = wald_ci(out.estimands[k].tau_hat, ve, cfg.alpha);
            mo.ok = true;
            mo.variance = ve.variance;
            mo.se = ve.se;
            mo.lower = ci.lower;
            mo.upper = ci.upper;
        };

        switch (ms.method) {
            case Method::sand:
                for (std::size_t k = 0; k < n_est; ++k) {
                    if (!out.estimands[k].point_ok) continue;
                    try {
                        const ThetaAug theta = theta_from_nuisances(ds, nus[k], cfg.estimands[k]);
                        record(k, sandwich_variance(ds, theta, ps_spec, or_spec,
                                                    cfg.estimands[k]));
                    } catch (const Error& err) {
                        out.estimands[k].methods[j].error = err.code();
                    }
                }
                break;
            case Method::boot_i: {
                const auto res = bootstrap_standard_multi(ds, ps_spec, or_spec, cfg.estimands,
                                                          cfg.r_replicates, cell_seed);
                for (std::size_t k = 0; k < n_est; ++k) {
                    if (!out.estimands[k].point_ok) continue;
                    if (res[k].ok) record(k, res[k].estimate);
                    else out.estimands[k].methods[j].error = res[k].error;
                }
                break;
            }
            case Method::boot_ii: {
                if (!ps_ok) break;
                const auto res = bootstrap_post_weighting_multi(
                    ds, ps.fitted, or_spec, cfg.estimands, cfg.r_replicates, cell_seed,
                    cfg.scale);
                for (std::size_t k = 0; k < n_est; ++k) {
                    if (!out.estimands[k].point_ok) continue;
                    if (res[k].ok) record(k, res[k].estimate);
                    else out.estimands[k].methods[j].error = res[k].error;
                }
                break;
            }
            case Method::wb:
                for (std::size_t k = 0; k < n_est; ++k) {
                    if (!out.estimands[k].point_ok) continue;
                    try {
                        const InfluenceVector iv =
                            influence_vector(ds, nus[k], cfg.estimands[k],
                                             out.estimands[k].tau_hat, ms.wb.if_variant);
                        record(k, wild_bootstrap(iv, out.estimands[k].tau_hat,
                                                 cfg.r_replicates, cell_seed,
                                                 ms.wb.perturbation, cfg.scale));
                    } catch (const Error& err) {
                        out.estimands[k].methods[j].error = err.code();
                    }
                }
                break;
        }
    }
    return out;
}

} // namespace

std::vector<MetricsRow> run_monte_carlo(const MonteCarloConfig& cfg,
                                        std::vector<ReplicateOutcome>* replicates_out) {
    if (cfg.estimands.empty()) throw Error(ErrorCode::ConfigError, "no estimands requested");
    if (cfg.methods.empty()) throw Error(ErrorCode::ConfigError, "no methods requested");
    if (cfg.m_replicates < 2)
        throw Error(ErrorCode::ConfigError, "need at least 2 Monte Carlo replicates");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw Error(ErrorCode::ConfigError, "alpha must lie in (0,1)");
    if (cfg.threads < 1) throw Error(ErrorCode::ConfigError, "threads must be at least 1");
    for (const auto& ms : cfg.methods)
        if (ms.method != Method::sand && cfg.r_replicates < 2)
            throw Error(ErrorCode::ConfigError,
                        "method " + method_label(ms) + " needs at least 2 replicates");

    const int n = cfg.n > 0 ? cfg.n : cfg.model.n_default;
    const DesignSpec ps_spec = scenario_ps_spec(cfg.scenario);
    const DesignSpec or_spec = scenario_or_spec(cfg.scenario);

    std::vector<double> truths(cfg.estimands.size());
    for (std::size_t k = 0; k < cfg.estimands.size(); ++k)
        truths[k] = true_wate(cfg.model, cfg.effect, cfg.estimands[k], cfg.truth_n_super,
                              truth_seed);

    const int m_total = cfg.m_replicates;
    std::vector<ReplicateOutcome> results(static_cast<std::size_t>(m_total));
    const int threads = std::min(cfg.threads, m_total);
    if (threads <= 1) {
        for (int m = 0; m < m_total; ++m)
            results[static_cast<std::size_t>(m)] = run_replicate(cfg, n, m, ps_spec, or_spec);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            try {
                for (int m = next.fetch_add(1); m < m_total; m = next.fetch_add(1))
                    results[static_cast<std::size_t>(m)] =
                        run_replicate(cfg, n, m, ps_spec, or_spec);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    std::vector<MetricsRow> rows;
    rows.reserve(cfg.estimands.size() * cfg.methods.size());
    for (std::size_t k = 0; k < cfg.estimands.size(); ++k) {
        const double truth = truths[k];

        std::vector<double> taus;
        taus.reserve(results.size());
        for (const auto& rep : results)
            if (rep.estimands[k].point_ok) taus.push_back(rep.estimands[k].tau_hat);

        double arbias_pct = nan_value, rmse = nan_value, esd = nan_value;
        if (!taus.empty()) {
            double rel = 0.0, sq = 0.0;
            for (double t : taus) {
                rel += (t - truth) / truth;
                sq += (t - truth) * (t - truth);
            }
            arbias_pct = 100.0 * std::abs(rel / static_cast<double>(taus.size()));
            rmse = std::sqrt(sq / static_cast<double>(taus.size()));
            esd = sample_sd(taus);
        }

        for (std::size_t j = 0; j < cfg.methods.size(); ++j) {
            std::vector<double> ses, res_ratio;
            int successes = 0, covered = 0;
            for (const auto& rep : results) {
                const auto& eo = rep.estimands[k];
                const auto& mo = eo.methods[j];
                if (!eo.point_ok || !mo.ok) continue;
                ++successes;
                ses.push_back(mo.se);
                res_ratio.push_back(esd * esd / mo.variance);
                covered += (mo.lower <= truth && truth <= mo.upper) ? 1 : 0;
            }

            MetricsRow row;
            row.model_id = cfg.model.model_id;
            row.n = n;
            row.effect = cfg.effect;
            row.scenario = cfg.scenario;
            row.estimand = cfg.estimands[k];
            row.method = method_label(cfg.methods[j]);
            row.truth = truth;
            row.arbias_pct = arbias_pct;
            row.rmse = rmse;
            row.esd = esd;
            row.median_se = ses.empty() ? nan_value : median(std::move(ses));
            row.median_re = res_ratio.empty() ? nan_value : median(std::move(res_ratio));
            row.cp = successes > 0 ? static_cast<double>(covered) / successes : nan_value;
            row.failures = m_total - successes;
            row.m_replicates = m_total;
            row.r_replicates = cfg.r_replicates;
            row.seed = cfg.seed;
            rows.push_back(std::move(row));
        }
    }

    if (replicates_out) *replicates_out = std::move(results);
    return rows;
}

} // namespace wate
