#pragma once

#include "wate/data.hpp"
#include "wate/error.hpp"
#include "wate/estimands.hpp"
#include "wate/estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wate {

enum class Method { sand, boot_i, boot_ii, wb };

enum class Perturbation { exp1, rademacher };

enum class ScaleEstimator { sd, iqr };

struct WbConfig {
    IfVariant if_variant = IfVariant::if_i;
    Perturbation perturbation = Perturbation::exp1;
    ScaleEstimator scale = ScaleEstimator::sd;
};

// One variance-method cell; wb carries its perturbation and influence choice.
struct MethodSpec {
    Method method = Method::sand;
    WbConfig wb;
};

// "sand", "boot1", "boot2", "wbexp1", "wbexp2", "wbrad1", "wbrad2"
MethodSpec parse_method(const std::string& name);
std::string method_label(const MethodSpec& spec);

struct VarianceEstimate {
    Method method = Method::sand;
    double variance = 0.0;            // Var(tau_hat), estimator scale
    double se = 0.0;
    int replicates_requested = 0;
    int replicates_used = 0;
    int failures = 0;
    std::optional<WbConfig> wb_config;
    std::map<ErrorCode, int> failure_breakdown;
};

// Stacked parameter of the estimating equations: propensity coefficients,
// the two outcome-model coefficient blocks, and the four scalar means.
struct ThetaAug {
    Eigen::VectorXd beta;
    Eigen::VectorXd alpha1;
    Eigen::VectorXd alpha0;
    double tau1g_m = 0.0;
    double tau0g_m = 0.0;
    double mu1g_m = 0.0;
    double mu0g_m = 0.0;

    double tau_hat() const { return tau1g_m - tau0g_m + mu1g_m - mu0g_m; }
};

struct WaldInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.0;
};

ThetaAug theta_from_nuisances(const Dataset& ds, const FittedNuisances& nus, const Estimand& est);

ThetaAug solve_theta(const Dataset& ds, const DesignSpec& ps_spec, const DesignSpec& or_spec,
                     const Estimand& est);

// N x dim matrix of estimating-equation contributions evaluated at theta,
// blocks ordered (beta | alpha1 | alpha0 | tau1g | tau0g | mu1g | mu0g).
Eigen::MatrixXd stacked_psi(const Dataset& ds, const DesignSpec& ps_spec,
                            const DesignSpec& or_spec, const Estimand& est,
                            const ThetaAug& theta);

// Analytic negative Jacobian of the mean estimating equation at theta.
Eigen::MatrixXd bread_matrix(const Dataset& ds, const DesignSpec& ps_spec,
                             const DesignSpec& or_spec, const Estimand& est,
                             const ThetaAug& theta);

VarianceEstimate sandwich_variance(const Dataset& ds, const ThetaAug& theta,
                                   const DesignSpec& ps_spec, const DesignSpec& or_spec,
                                   const Estimand& est);

// Resample rows with replacement and refit everything per replicate. Failed
// replicates are dropped and counted. estimates_out, when given, receives the
// successful replicate estimates in replicate order.
VarianceEstimate bootstrap_standard(const Dataset& ds, const DesignSpec& ps_spec,
                                    const DesignSpec& or_spec, const Estimand& est, int R,
                                    std::uint64_t seed,
                                    std::vector<double>* estimates_out = nullptr);

// Resample rows together with their already-fitted propensity scores and refit
// only the outcome models per replicate.
VarianceEstimate bootstrap_post_weighting(const Dataset& ds, const FittedNuisances& nus,
                                          const DesignSpec& or_spec, const Estimand& est, int R,
                                          std::uint64_t seed,
                                          ScaleEstimator scale = ScaleEstimator::sd,
                                          std::vector<double>* estimates_out = nullptr);

// Perturb the influence values with i.i.d. multipliers: delta_r =
// N^{-1/2} sum_i xi_i phi_i, variance = scale(delta)^2 / N.
VarianceEstimate wild_bootstrap(const InfluenceVector& phi, double tau_hat, int R,
                                std::uint64_t seed, Perturbation perturbation,
                                ScaleEstimator scale = ScaleEstimator::sd,
                                std::vector<double>* deltas_out = nullptr);

// Several estimands over one pass of shared resamples and refits. Replicate r
// draws from (seed, r) exactly as the single-estimand functions do, and the
// model fits do not depend on the estimand, so each entry is bit-identical to
// the corresponding single-estimand call. Per-estimand shortfalls are reported
// in the result instead of thrown.
struct BootstrapMultiResult {
    bool ok = false;
    ErrorCode error = ErrorCode::TooFewSuccessfulReplicates;
    std::string error_message;
    VarianceEstimate estimate;
    std::vector<double> replicate_estimates;
};

std::vector<BootstrapMultiResult> bootstrap_standard_multi(const Dataset& ds,
                                                           const DesignSpec& ps_spec,
                                                           const DesignSpec& or_spec,
                                                           const std::vector<Estimand>& ests,
                                                           int R, std::uint64_t seed);

std::vector<BootstrapMultiResult> bootstrap_post_weighting_multi(
    const Dataset& ds, const Eigen::VectorXd& e, const DesignSpec& or_spec,
    const std::vector<Estimand>& ests, int R, std::uint64_t seed,
    ScaleEstimator scale = ScaleEstimator::sd);

WaldInterval wald_ci(double tau_hat, const VarianceEstimate& ve, double alpha);

} // namespace wate
