#include "wate/estimator.hpp"

#include "wate/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace wate {

namespace {

Eigen::MatrixXd arm_rows(const Eigen::MatrixXd& design, const std::vector<int>& z, int arm) {
    Eigen::Index count = 0;
    for (int zi : z) count += (zi == arm);
    Eigen::MatrixXd out(count, design.cols());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < design.rows(); ++i)
        if (z[static_cast<std::size_t>(i)] == arm) out.row(r++) = design.row(i);
    return out;
}

Eigen::VectorXd arm_entries(const Eigen::VectorXd& v, const std::vector<int>& z, int arm) {
    Eigen::Index count = 0;
    for (int zi : z) count += (zi == arm);
    Eigen::VectorXd out(count);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (z[static_cast<std::size_t>(i)] == arm) out[r++] = v[i];
    return out;
}

} // namespace

FittedNuisances fit_nuisances_given_propensity(const Dataset& ds, const Eigen::VectorXd& e,
                                               const DesignSpec& or_spec, const Estimand& est) {
    const std::size_t n = ds.n();
    if (static_cast<std::size_t>(e.size()) != n)
        throw Error(ErrorCode::ConfigError, "propensity vector length does not match dataset");

    const std::size_t n1 = ds.n_treated();
    const std::size_t n0 = n - n1;
    if (n1 == 0 || n0 == 0)
        throw Error(ErrorCode::SingleClass, "dataset has an empty treatment arm");
    const std::size_t min_arm = static_cast<std::size_t>(or_spec.n_terms()) + 2;
    if (n1 < min_arm || n0 < min_arm)
        throw Error(ErrorCode::ArmTooSmall,
                    "outcome model with " + std::to_string(or_spec.n_terms()) +
                        " terms needs at least " + std::to_string(min_arm) +
                        " observations per arm (have " + std::to_string(n1) + " treated, " +
                        std::to_string(n0) + " control)");

    const Eigen::MatrixXd design = design_matrix(ds, or_spec);
    LinearFit or1 = fit_ols(arm_rows(design, ds.z(), 1), arm_entries(ds.y(), ds.z(), 1));
    or1.which_arm = 1;
    LinearFit or0 = fit_ols(arm_rows(design, ds.z(), 0), arm_entries(ds.y(), ds.z(), 0));
    or0.which_arm = 0;

    FittedNuisances nus;
    nus.e = e;
    nus.m1 = design * or1.alpha;
    nus.m0 = design * or0.alpha;
    nus.or0_fit = std::move(or0);
    nus.or1_fit = std::move(or1);
    retarget_nuisances(nus, est);
    return nus;
}

void retarget_nuisances(FittedNuisances& nus, const Estimand& est) {
    const Eigen::Index n = nus.e.size();
    nus.g.resize(n);
    nus.w0.resize(n);
    nus.w1.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        nus.g[i] = tilt(est, nus.e[i]);
        const auto [w0, w1] = balance_weights(est, nus.e[i]);
        nus.w0[i] = w0;
        nus.w1[i] = w1;
    }
    nus.mu_g_hat = nus.g.mean();
}

FittedNuisances fit_nuisances(const Dataset& ds, const DesignSpec& ps_spec,
                              const DesignSpec& or_spec, const Estimand& est) {
    const Eigen::Map<const Eigen::VectorXi> z(ds.z().data(),
                                              static_cast<Eigen::Index>(ds.z().size()));
    LogisticFit ps = fit_logistic(design_matrix(ds, ps_spec), z);
    FittedNuisances nus = fit_nuisances_given_propensity(ds, ps.fitted, or_spec, est);
    nus.ps_fit = std::move(ps);
    return nus;
}

PointEstimate augmented_wate(const Dataset& ds, const FittedNuisances& nus, const Estimand& est) {
    const std::size_t n = ds.n();
    double sum_g = 0.0, sum_g_diff = 0.0;
    double sum_w1 = 0.0, sum_w1_resid = 0.0;
    double sum_w0 = 0.0, sum_w0_resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        sum_g += nus.g[k];
        sum_g_diff += nus.g[k] * (nus.m1[k] - nus.m0[k]);
        if (ds.z()[i] == 1) {
            sum_w1 += nus.w1[k];
            sum_w1_resid += nus.w1[k] * (ds.y()[k] - nus.m1[k]);
        } else {
            sum_w0 += nus.w0[k];
            sum_w0_resid += nus.w0[k] * (ds.y()[k] - nus.m0[k]);
        }
    }
    if (sum_g == 0.0 || sum_w1 == 0.0 || sum_w0 == 0.0)
        throw Error(ErrorCode::DegenerateWeights,
                    "zero weight mass in a component of the augmented estimator");

    PointEstimate pt;
    pt.estimand = est;
    pt.n = n;
    pt.tau_hat = sum_g_diff / sum_g + sum_w1_resid / sum_w1 - sum_w0_resid / sum_w0;
    return pt;
}

InfluenceVector influence_vector(const Dataset& ds, const FittedNuisances& nus,
                                 const Estimand& est, double tau_hat, IfVariant variant) {
    if (nus.mu_g_hat <= 0.0)
        throw Error(ErrorCode::DegenerateWeights, "mean tilt is zero, influence values undefined");

    const std::size_t n = ds.n();
    InfluenceVector iv;
    iv.variant = variant;
    iv.phi.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        const double z = ds.z()[i];
        const double e = nus.e[k];
        const double f = z * (ds.y()[k] - nus.m1[k]) / e -
                         (1.0 - z) * (ds.y()[k] - nus.m0[k]) / (1.0 - e);
        double psi = 0.0;
        if (variant == IfVariant::if_ii)
            psi = tilt_derivative(est, e) * (nus.m1[k] - nus.m0[k] - tau_hat) * (z - e);
        iv.phi[k] = (nus.g[k] / nus.mu_g_hat) * (f + nus.m1[k] - nus.m0[k] - tau_hat) +
                    psi / nus.mu_g_hat;
    }
    return iv;
}

double effective_sample_size(const Eigen::VectorXd& weights) {
    const double total = weights.sum();
    if (total <= 0.0)
        throw Error(ErrorCode::AllZeroWeights, "effective sample size of an all-zero weight vector");
    return total * total / weights.squaredNorm();
}

Eigen::VectorXd weighted_asmd(const Dataset& ds, const Eigen::VectorXd& w_treated,
                              const Eigen::VectorXd& w_control) {
    const std::size_t n = ds.n();
    if (static_cast<std::size_t>(w_treated.size()) != n ||
        static_cast<std::size_t>(w_control.size()) != n)
        throw Error(ErrorCode::ConfigError, "weight vector length does not match dataset");

    double mass1 = 0.0, mass0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        if (ds.z()[i] == 1) mass1 += w_treated[k];
        else mass0 += w_control[k];
    }
    if (mass1 <= 0.0 || mass0 <= 0.0)
        throw Error(ErrorCode::DegenerateWeights, "zero weight mass in an arm");

    const Eigen::MatrixXd& x = ds.covariates();
    Eigen::VectorXd out(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double wm1 = 0.0, wm0 = 0.0;
        double s1 = 0.0, ss1 = 0.0, s0 = 0.0, ss0 = 0.0;
        std::size_t n1 = 0, n0 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::Index k = static_cast<Eigen::Index>(i);
            const double v = x(k, j);
            if (ds.z()[i] == 1) {
                wm1 += w_treated[k] * v;
                s1 += v;
                ss1 += v * v;
                ++n1;
            } else {
                wm0 += w_control[k] * v;
                s0 += v;
                ss0 += v * v;
                ++n0;
            }
        }
        const double diff = wm1 / mass1 - wm0 / mass0;
        const double var1 = n1 > 1 ? (ss1 - s1 * s1 / n1) / (n1 - 1) : 0.0;
        const double var0 = n0 > 1 ? (ss0 - s0 * s0 / n0) / (n0 - 1) : 0.0;
        const double pooled = std::sqrt(0.5 * (std::max(var1, 0.0) + std::max(var0, 0.0)));
        if (pooled == 0.0)
            out[j] = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        else
            out[j] = std::abs(diff) / pooled;
    }
    return out;
}

} // namespace wate
