#include "wate/variance.hpp"

#include "wate/glm.hpp"
#include "wate/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wate {

namespace {

// Quartile spread of the standard normal, as conventionally rounded.
constexpr double normal_iqr = 1.349;

struct BlockLayout {
    Eigen::Index d1 = 0;   // propensity design columns
    Eigen::Index d2 = 0;   // outcome design columns
    Eigen::Index head() const { return d1 + 2 * d2; }
    Eigen::Index dim() const { return head() + 4; }
};

Dataset resample_rows(const Dataset& ds, Rng& rng, std::vector<std::size_t>& indices) {
    const std::size_t n = ds.n();
    indices.resize(n);
    std::vector<int> z(n);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), ds.covariates().cols());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.index(n);
        indices[i] = j;
        z[i] = ds.z()[j];
        y[static_cast<Eigen::Index>(i)] = ds.y()[static_cast<Eigen::Index>(j)];
        x.row(static_cast<Eigen::Index>(i)) = ds.covariates().row(static_cast<Eigen::Index>(j));
    }
    return Dataset(std::move(z), std::move(y), std::move(x), ds.covariate_names());
}

double replicate_spread_squared(const std::vector<double>& estimates, ScaleEstimator scale) {
    if (scale == ScaleEstimator::sd) return sample_variance(estimates);
    const double spread = interquartile_range(estimates) / normal_iqr;
    return spread * spread;
}

// Shared loop behind both bootstrap flavors. post_weighting selects whether
// replicates carry the supplied propensity scores or refit them.
std::vector<BootstrapMultiResult> bootstrap_multi(const Dataset& ds, const DesignSpec* ps_spec,
                                                  const Eigen::VectorXd* e,
                                                  const DesignSpec& or_spec,
                                                  const std::vector<Estimand>& ests, int R,
                                                  std::uint64_t seed, ScaleEstimator scale,
                                                  Method method) {
    if (ests.empty()) throw Error(ErrorCode::ConfigError, "no estimands requested");
    if (R < 2) throw Error(ErrorCode::ConfigError, "bootstrap needs at least 2 replicates");

    const std::size_t n_est = ests.size();
    std::vector<BootstrapMultiResult> results(n_est);
    for (auto& res : results) {
        res.estimate.method = method;
        res.estimate.replicates_requested = R;
        res.replicate_estimates.reserve(static_cast<std::size_t>(R));
    }

    std::vector<std::size_t> indices;
    for (int r = 0; r < R; ++r) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        FittedNuisances nus;
        std::optional<Dataset> rds;
        try {
            rds.emplace(resample_rows(ds, rng, indices));
            if (e) {
                Eigen::VectorXd re(static_cast<Eigen::Index>(indices.size()));
                for (std::size_t i = 0; i < indices.size(); ++i)
                    re[static_cast<Eigen::Index>(i)] =
                        (*e)[static_cast<Eigen::Index>(indices[i])];
                nus = fit_nuisances_given_propensity(*rds, re, or_spec, ests.front());
            } else {
                nus = fit_nuisances(*rds, *ps_spec, or_spec, ests.front());
            }
        } catch (const Error& err) {
            for (auto& res : results) {
                ++res.estimate.failures;
                ++res.estimate.failure_breakdown[err.code()];
            }
            continue;
        }
        for (std::size_t k = 0; k < n_est; ++k) {
            if (k > 0) retarget_nuisances(nus, ests[k]);
            try {
                results[k].replicate_estimates.push_back(
                    augmented_wate(*rds, nus, ests[k]).tau_hat);
            } catch (const Error& err) {
                ++results[k].estimate.failures;
                ++results[k].estimate.failure_breakdown[err.code()];
            }
        }
    }

    const int needed = std::max(10, R / 4);
    for (auto& res : results) {
        res.estimate.replicates_used = static_cast<int>(res.replicate_estimates.size());
        if (res.estimate.replicates_used < needed) {
            res.ok = false;
            res.error = ErrorCode::TooFewSuccessfulReplicates;
            res.error_message = "only " + std::to_string(res.estimate.replicates_used) + " of " +
                                std::to_string(R) + " replicates usable, need at least " +
                                std::to_string(needed);
            continue;
        }
        res.ok = true;
        res.estimate.variance = method == Method::boot_i
                                    ? sample_variance(res.replicate_estimates)
                                    : replicate_spread_squared(res.replicate_estimates, scale);
        res.estimate.se = std::sqrt(res.estimate.variance);
    }
    return results;
}

} // namespace

ThetaAug theta_from_nuisances(const Dataset& ds, const FittedNuisances& nus, const Estimand&) {
    const std::size_t n = ds.n();
    double sum_g = 0.0, sum_gm1 = 0.0, sum_gm0 = 0.0;
    double sum_w1 = 0.0, sum_w1_resid = 0.0;
    double sum_w0 = 0.0, sum_w0_resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        sum_g += nus.g[k];
        sum_gm1 += nus.g[k] * nus.m1[k];
        sum_gm0 += nus.g[k] * nus.m0[k];
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
                    "zero weight mass while assembling the stacked parameter");

    ThetaAug theta;
    theta.beta = nus.ps_fit.beta;
    theta.alpha1 = nus.or1_fit.alpha;
    theta.alpha0 = nus.or0_fit.alpha;
    theta.tau1g_m = sum_gm1 / sum_g;
    theta.tau0g_m = sum_gm0 / sum_g;
    theta.mu1g_m = sum_w1_resid / sum_w1;
    theta.mu0g_m = sum_w0_resid / sum_w0;
    return theta;
}

ThetaAug solve_theta(const Dataset& ds, const DesignSpec& ps_spec, const DesignSpec& or_spec,
                     const Estimand& est) {
    return theta_from_nuisances(ds, fit_nuisances(ds, ps_spec, or_spec, est), est);
}

Eigen::MatrixXd stacked_psi(const Dataset& ds, const DesignSpec& ps_spec,
                            const DesignSpec& or_spec, const Estimand& est,
                            const ThetaAug& theta) {
    const Eigen::MatrixXd v = design_matrix(ds, ps_spec);
    const Eigen::MatrixXd w = design_matrix(ds, or_spec);
    const BlockLayout lay{v.cols(), w.cols()};

    const Eigen::VectorXd e = predict_probability(v, theta.beta);
    const Eigen::VectorXd m1 = w * theta.alpha1;
    const Eigen::VectorXd m0 = w * theta.alpha0;

    const std::size_t n = ds.n();
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), lay.dim());
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        const double z = ds.z()[i];
        const double y = ds.y()[k];
        const double g = tilt(est, e[k]);
        const auto [w0, w1] = balance_weights(est, e[k]);

        psi.block(k, 0, 1, lay.d1) = (z - e[k]) * v.row(k);
        psi.block(k, lay.d1, 1, lay.d2) = z * (y - m1[k]) * w.row(k);
        psi.block(k, lay.d1 + lay.d2, 1, lay.d2) = (1.0 - z) * (y - m0[k]) * w.row(k);
        psi(k, lay.head() + 0) = g * (m1[k] - theta.tau1g_m);
        psi(k, lay.head() + 1) = g * (m0[k] - theta.tau0g_m);
        psi(k, lay.head() + 2) = z * w1 * (y - m1[k] - theta.mu1g_m);
        psi(k, lay.head() + 3) = (1.0 - z) * w0 * (y - m0[k] - theta.mu0g_m);
    }
    return psi;
}

Eigen::MatrixXd bread_matrix(const Dataset& ds, const DesignSpec& ps_spec,
                             const DesignSpec& or_spec, const Estimand& est,
                             const ThetaAug& theta) {
    const Eigen::MatrixXd v = design_matrix(ds, ps_spec);
    const Eigen::MatrixXd w = design_matrix(ds, or_spec);
    const BlockLayout lay{v.cols(), w.cols()};

    const Eigen::VectorXd e = predict_probability(v, theta.beta);
    const Eigen::VectorXd m1 = w * theta.alpha1;
    const Eigen::VectorXd m0 = w * theta.alpha0;

    const Eigen::Index ob = 0;
    const Eigen::Index oa1 = lay.d1;
    const Eigen::Index oa0 = lay.d1 + lay.d2;
    const Eigen::Index ot = lay.head();

    const std::size_t n = ds.n();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(lay.dim(), lay.dim());
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i);
        const double z = ds.z()[i];
        const double y = ds.y()[k];
        const double ei = e[k];
        const double g = tilt(est, ei);
        const double gd = tilt_beta_gradient_factor(est, ei);  // d g / d beta = gd * v
        const auto [w0, w1] = balance_weights(est, ei);

        a.block(ob, ob, lay.d1, lay.d1) += ei * (1.0 - ei) * v.row(k).transpose() * v.row(k);
        a.block(oa1, oa1, lay.d2, lay.d2) += z * w.row(k).transpose() * w.row(k);
        a.block(oa0, oa0, lay.d2, lay.d2) += (1.0 - z) * w.row(k).transpose() * w.row(k);

        a.block(ot + 0, ob, 1, lay.d1) -= gd * (m1[k] - theta.tau1g_m) * v.row(k);
        a.block(ot + 0, oa1, 1, lay.d2) -= g * w.row(k);
        a(ot + 0, ot + 0) += g;

        a.block(ot + 1, ob, 1, lay.d1) -= gd * (m0[k] - theta.tau0g_m) * v.row(k);
        a.block(ot + 1, oa0, 1, lay.d2) -= g * w.row(k);
        a(ot + 1, ot + 1) += g;

        a.block(ot + 2, ob, 1, lay.d1) -=
            z / ei * (gd - (1.0 - ei) * g) * (y - m1[k] - theta.mu1g_m) * v.row(k);
        a.block(ot + 2, oa1, 1, lay.d2) += z * w1 * w.row(k);
        a(ot + 2, ot + 2) += z * w1;

        a.block(ot + 3, ob, 1, lay.d1) -=
            (1.0 - z) / (1.0 - ei) * (gd + ei * g) * (y - m0[k] - theta.mu0g_m) * v.row(k);
        a.block(ot + 3, oa0, 1, lay.d2) += (1.0 - z) * w0 * w.row(k);
        a(ot + 3, ot + 3) += (1.0 - z) * w0;
    }
    return a / static_cast<double>(n);
}

VarianceEstimate sandwich_variance(const Dataset& ds, const ThetaAug& theta,
                                   const DesignSpec& ps_spec, const DesignSpec& or_spec,
                                   const Estimand& est) {
    const Eigen::MatrixXd psi = stacked_psi(ds, ps_spec, or_spec, est, theta);
    const Eigen::MatrixXd a = bread_matrix(ds, ps_spec, or_spec, est, theta);
    const BlockLayout lay{static_cast<Eigen::Index>(theta.beta.size()),
                          static_cast<Eigen::Index>(theta.alpha1.size())};
    const Eigen::Index head = lay.head();

    // d' = c'A^{-1} with c = (0,...,0, 1, -1, 1, -1)'. A is block lower
    // triangular: the head block is block-diagonal over (beta, alpha1, alpha0)
    // and the tail block is diagonal, so d comes from three small solves.
    const Eigen::Vector4d u(1.0, -1.0, 1.0, -1.0);
    const Eigen::Vector4d tail_diag = a.bottomRightCorner(4, 4).diagonal();

    Eigen::VectorXd d(lay.dim());
    bool shortcut_ok = tail_diag.cwiseAbs().minCoeff() > 0.0;
    if (shortcut_ok) {
        const Eigen::Vector4d s = u.cwiseQuotient(tail_diag);
        const Eigen::VectorXd t = a.bottomLeftCorner(4, head).transpose() * s;

        auto solve_block = [&](Eigen::Index offset, Eigen::Index size, Eigen::VectorXd& out) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(a.block(offset, offset, size, size));
            lu.setThreshold(1e-10);
            if (!lu.isInvertible()) return false;
            out = lu.solve(t.segment(offset, size));
            return true;
        };
        Eigen::VectorXd db, da1, da0;
        shortcut_ok = solve_block(0, lay.d1, db) && solve_block(lay.d1, lay.d2, da1) &&
                      solve_block(lay.d1 + lay.d2, lay.d2, da0);
        if (shortcut_ok) {
            d.segment(0, lay.d1) = -db;
            d.segment(lay.d1, lay.d2) = -da1;
            d.segment(lay.d1 + lay.d2, lay.d2) = -da0;
            d.segment(head, 4) = s;
        }
    }
    if (!shortcut_ok) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a.transpose());
        lu.setThreshold(1e-10);
        if (!lu.isInvertible())
            throw Error(ErrorCode::SandwichUnobtainable,
                        "estimating-equation Jacobian is singular at the fitted parameters");
        Eigen::VectorXd c = Eigen::VectorXd::Zero(lay.dim());
        c[head + 0] = 1.0;
        c[head + 1] = -1.0;
        c[head + 2] = 1.0;
        c[head + 3] = -1.0;
        d = lu.solve(c);
    }

    const double n = static_cast<double>(ds.n());
    VarianceEstimate ve;
    ve.method = Method::sand;
    ve.variance = (psi * d).squaredNorm() / (n * n);
    ve.se = std::sqrt(ve.variance);
    return ve;
}

std::vector<BootstrapMultiResult> bootstrap_standard_multi(const Dataset& ds,
                                                           const DesignSpec& ps_spec,
                                                           const DesignSpec& or_spec,
                                                           const std::vector<Estimand>& ests,
                                                           int R, std::uint64_t seed) {
    return bootstrap_multi(ds, &ps_spec, nullptr, or_spec, ests, R, seed, ScaleEstimator::sd,
                           Method::boot_i);
}

std::vector<BootstrapMultiResult> bootstrap_post_weighting_multi(
    const Dataset& ds, const Eigen::VectorXd& e, const DesignSpec& or_spec,
    const std::vector<Estimand>& ests, int R, std::uint64_t seed, ScaleEstimator scale) {
    if (e.size() != static_cast<Eigen::Index>(ds.n()))
        throw Error(ErrorCode::ConfigError, "fitted propensity length does not match dataset");
    return bootstrap_multi(ds, nullptr, &e, or_spec, ests, R, seed, scale, Method::boot_ii);
}

VarianceEstimate bootstrap_standard(const Dataset& ds, const DesignSpec& ps_spec,
                                    const DesignSpec& or_spec, const Estimand& est, int R,
                                    std::uint64_t seed, std::vector<double>* estimates_out) {
    BootstrapMultiResult res =
        std::move(bootstrap_standard_multi(ds, ps_spec, or_spec, {est}, R, seed).front());
    if (!res.ok) throw Error(res.error, res.error_message);
    if (estimates_out) *estimates_out = std::move(res.replicate_estimates);
    return res.estimate;
}

VarianceEstimate bootstrap_post_weighting(const Dataset& ds, const FittedNuisances& nus,
                                          const DesignSpec& or_spec, const Estimand& est, int R,
                                          std::uint64_t seed, ScaleEstimator scale,
                                          std::vector<double>* estimates_out) {
    BootstrapMultiResult res = std::move(
        bootstrap_post_weighting_multi(ds, nus.e, or_spec, {est}, R, seed, scale).front());
    if (!res.ok) throw Error(res.error, res.error_message);
    if (estimates_out) *estimates_out = std::move(res.replicate_estimates);
    return res.estimate;
}

VarianceEstimate wild_bootstrap(const InfluenceVector& phi, double /*tau_hat*/, int R,
                                std::uint64_t seed, Perturbation perturbation,
                                ScaleEstimator scale, std::vector<double>* deltas_out) {
    if (R < 2) throw Error(ErrorCode::ConfigError, "wild bootstrap needs at least 2 replicates");
    if (!phi.phi.allFinite())
        throw Error(ErrorCode::DomainError, "influence values must be finite");

    const Eigen::Index n = phi.phi.size();
    if (n == 0) throw Error(ErrorCode::ConfigError, "empty influence vector");
    const double root_n = std::sqrt(static_cast<double>(n));

    std::vector<double> deltas(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double xi =
                perturbation == Perturbation::exp1 ? rng.exponential1() : rng.rademacher();
            acc += xi * phi.phi[i];
        }
        deltas[static_cast<std::size_t>(r)] = acc / root_n;
    }

    VarianceEstimate ve;
    ve.method = Method::wb;
    ve.replicates_requested = R;
    ve.replicates_used = R;
    ve.variance = replicate_spread_squared(deltas, scale) / static_cast<double>(n);
    ve.se = std::sqrt(ve.variance);
    ve.wb_config = WbConfig{phi.variant, perturbation, scale};
    if (deltas_out) *deltas_out = std::move(deltas);
    return ve;
}

MethodSpec parse_method(const std::string& name) {
    MethodSpec spec;
    if (name == "sand") {
        spec.method = Method::sand;
        return spec;
    }
    if (name == "boot1") {
        spec.method = Method::boot_i;
        return spec;
    }
    if (name == "boot2") {
        spec.method = Method::boot_ii;
        return spec;
    }
    if (name == "wbexp1" || name == "wbexp2" || name == "wbrad1" || name == "wbrad2") {
        spec.method = Method::wb;
        spec.wb.perturbation =
            name.compare(2, 3, "exp") == 0 ? Perturbation::exp1 : Perturbation::rademacher;
        spec.wb.if_variant = name.back() == '1' ? IfVariant::if_i : IfVariant::if_ii;
        return spec;
    }
    throw Error(ErrorCode::ConfigError, "unknown method '" + name + "'");
}

std::string method_label(const MethodSpec& spec) {
    switch (spec.method) {
        case Method::sand: return "sand";
        case Method::boot_i: return "boot1";
        case Method::boot_ii: return "boot2";
        case Method::wb:
            return std::string("wb") +
                   (spec.wb.perturbation == Perturbation::exp1 ? "exp" : "rad") +
                   (spec.wb.if_variant == IfVariant::if_i ? "1" : "2");
    }
    return "?";
}

WaldInterval wald_ci(double tau_hat, const VarianceEstimate& ve, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw Error(ErrorCode::DomainError,
                    "confidence level parameter " + std::to_string(alpha) + " outside (0,1)");
    const double zq = normal_quantile(1.0 - alpha / 2.0);
    WaldInterval ci;
    ci.lower = tau_hat - zq * ve.se;
    ci.upper = tau_hat + zq * ve.se;
    ci.level = 1.0 - alpha;
    return ci;
}

} // namespace wate
