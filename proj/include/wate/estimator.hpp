#pragma once

#include "wate/data.hpp"
#include "wate/estimands.hpp"
#include "wate/glm.hpp"

#include <Eigen/Dense>

namespace wate {

struct FittedNuisances {
    Eigen::VectorXd e;          // fitted propensity scores
    Eigen::VectorXd m0;         // control-model predictions for all units
    Eigen::VectorXd m1;         // treated-model predictions for all units
    Eigen::VectorXd g;          // tilting values g(e_i)
    Eigen::VectorXd w0;         // g/(1-e)
    Eigen::VectorXd w1;         // g/e
    double mu_g_hat = 0.0;      // mean of g
    LogisticFit ps_fit;
    LinearFit or0_fit;
    LinearFit or1_fit;
};

struct PointEstimate {
    Estimand estimand;
    double tau_hat = 0.0;
    std::size_t n = 0;
};

enum class IfVariant { if_i, if_ii };

struct InfluenceVector {
    Eigen::VectorXd phi;
    IfVariant variant = IfVariant::if_i;
};

// Fits the propensity model on the full sample and one outcome model per arm,
// then evaluates tilts and balancing weights at the fitted scores.
FittedNuisances fit_nuisances(const Dataset& ds, const DesignSpec& ps_spec,
                              const DesignSpec& or_spec, const Estimand& est);

// Same, but with propensity scores supplied by the caller; only the outcome
// models are refit. ps_fit is left empty.
FittedNuisances fit_nuisances_given_propensity(const Dataset& ds, const Eigen::VectorXd& e,
                                               const DesignSpec& or_spec, const Estimand& est);

// Recomputes the tilt-dependent pieces (g, w0, w1, mu_g_hat) for a different
// estimand, keeping the fitted models and predictions.
void retarget_nuisances(FittedNuisances& nus, const Estimand& est);

// tau_hat = sum g(m1-m0)/sum g
//         + sum_{z=1} w1(y-m1)/sum_{z=1} w1 - sum_{z=0} w0(y-m0)/sum_{z=0} w0
PointEstimate augmented_wate(const Dataset& ds, const FittedNuisances& nus, const Estimand& est);

// phi_i = (g_i/mu_g)[F_i + (m1_i - m0_i) - tau_hat] + psi_i/mu_g where
// F_i = z_i(y_i-m1_i)/e_i - (1-z_i)(y_i-m0_i)/(1-e_i) and psi_i is 0 under
// if_i or tilt_derivative(e_i)(m1_i-m0_i-tau_hat)(z_i-e_i) under if_ii.
InfluenceVector influence_vector(const Dataset& ds, const FittedNuisances& nus,
                                 const Estimand& est, double tau_hat, IfVariant variant);

// Kish formula (sum w)^2 / sum w^2.
double effective_sample_size(const Eigen::VectorXd& weights);

// Per-covariate |weighted mean difference| / pooled unweighted SD, where the
// pooled SD is sqrt((s1^2 + s0^2)/2) from the raw arm samples. A covariate
// with zero pooled SD reports 0 when the weighted means agree, +inf otherwise.
Eigen::VectorXd weighted_asmd(const Dataset& ds, const Eigen::VectorXd& w_treated,
                              const Eigen::VectorXd& w_control);

} // namespace wate
