#pragma once

#include "wate/data.hpp"
#include "wate/error.hpp"
#include "wate/estimands.hpp"
#include "wate/variance.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace wate {

struct SimModel {
    int model_id = 2;
    Eigen::Matrix<double, 8, 1> beta;   // treatment-assignment coefficients, intercept first
    int n_default = 1000;

    static SimModel from_id(int model_id);
};

enum class EffectType { homogeneous, heterogeneous };

enum class Scenario { a1, a2, a3, a4 };

EffectType parse_effect(const std::string& text);
Scenario parse_scenario(const std::string& text);
std::string to_string(EffectType effect);
std::string to_string(Scenario scenario);

// Model specification per scenario: a1 = both correct, a2 = propensity model
// correct only, a3 = outcome models correct only, a4 = both misspecified.
// Correct means covariates x1..x7, misspecified drops the quadratic terms.
DesignSpec scenario_ps_spec(Scenario scenario);
DesignSpec scenario_or_spec(Scenario scenario);

struct SyntheticDataset {
    Dataset data;
    Eigen::VectorXd true_e;
    Eigen::VectorXd y0;
    Eigen::VectorXd y1;
    Eigen::VectorXd delta;
};

SyntheticDataset generate(const SimModel& model, int n, EffectType effect, std::uint64_t seed);

// Plug-in E[g(e)delta]/E[g(e)] over a streamed super-population draw using the
// true propensity and true effect. n_super must be at least 1e5.
double true_wate(const SimModel& model, EffectType effect, const Estimand& est,
                 std::size_t n_super, std::uint64_t seed);

// Probability limit of the estimator under the scenario's working models:
// fit them on a super-population draw and evaluate sum g(m1-m0) / sum g.
double pseudo_true_wate(const SimModel& model, EffectType effect, const Estimand& est,
                        Scenario scenario, std::size_t n_super, std::uint64_t seed);

struct MonteCarloConfig {
    SimModel model;
    int n = 0;                          // 0 uses model.n_default
    EffectType effect = EffectType::heterogeneous;
    Scenario scenario = Scenario::a1;
    std::vector<Estimand> estimands;
    std::vector<MethodSpec> methods;
    int m_replicates = 500;
    int r_replicates = 200;
    double alpha = 0.05;
    std::uint64_t seed = 42;
    int threads = 1;
    ScaleEstimator scale = ScaleEstimator::sd;
    std::size_t truth_n_super = 1000000;
};

struct MethodOutcome {
    bool ok = false;
    ErrorCode error = ErrorCode::ConfigError;
    double variance = 0.0;
    double se = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct EstimandOutcome {
    bool point_ok = false;
    ErrorCode point_error = ErrorCode::ConfigError;
    double tau_hat = 0.0;
    std::vector<MethodOutcome> methods;
};

struct ReplicateOutcome {
    std::vector<EstimandOutcome> estimands;
};

struct MetricsRow {
    int model_id = 0;
    int n = 0;
    EffectType effect = EffectType::heterogeneous;
    Scenario scenario = Scenario::a1;
    Estimand estimand;
    std::string method;
    double truth = 0.0;
    double arbias_pct = 0.0;
    double rmse = 0.0;
    double esd = 0.0;
    double median_se = 0.0;
    double median_re = 0.0;
    double cp = 0.0;
    int failures = 0;
    int m_replicates = 0;
    int r_replicates = 0;
    std::uint64_t seed = 0;
};

// One row per (estimand, method). Point-estimate metrics aggregate over the
// replicates whose point estimate succeeded; SE/RE/CP aggregate over the
// replicates where the method also succeeded, with the rest counted in
// failures. Deterministic for fixed config regardless of threads.
std::vector<MetricsRow> run_monte_carlo(const MonteCarloConfig& cfg,
                                        std::vector<ReplicateOutcome>* replicates_out = nullptr);

} // namespace wate
