#include "wate/glm.hpp"

#include "wate/error.hpp"
#include "wate/stats.hpp"

#include <cmath>
#include <string>

namespace wate {

namespace {

constexpr double prob_clamp = 1e-12;
constexpr double score_tol = 1e-10;
constexpr double pivot_threshold = 1e-10;
constexpr int max_iterations = 100;
constexpr int max_halvings = 50;

void check_full_rank(const Eigen::MatrixXd& design) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(pivot_threshold);
    if (qr.rank() < design.cols())
        throw Error(ErrorCode::RankDeficientDesign,
                    "design has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(design.cols()) + " columns");
}

double clamp_probability(double p) {
    return std::min(std::max(p, prob_clamp), 1.0 - prob_clamp);
}

} // namespace

double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXi& z,
                       const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // z*eta - log(1 + exp(eta)), split by sign to avoid overflow
        const double h = eta[i];
        const double log1pexp = h > 0.0 ? h + std::log1p(std::exp(-h)) : std::log1p(std::exp(h));
        ll += z[i] * h - log1pexp;
    }
    return ll;
}

Eigen::VectorXd predict_probability(const Eigen::MatrixXd& design, const Eigen::VectorXd& beta) {
    Eigen::VectorXd p = design * beta;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p[i] = clamp_probability(expit(p[i]));
    return p;
}

LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXi& z) {
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (z.size() != n)
        throw Error(ErrorCode::ConfigError, "treatment length does not match design rows");

    const int ones = z.sum();
    if (ones == 0 || ones == n)
        throw Error(ErrorCode::SingleClass,
                    "treatment indicator is constant, cannot fit propensity model");
    check_full_rank(design);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    double ll = logistic_loglik(design, z, beta);

    LogisticFit fit;
    fit.converged = false;
    fit.iterations = 0;

    Eigen::VectorXd probs(n), w(n), resid(n);
    for (int iter = 0; iter < max_iterations; ++iter) {
        const Eigen::VectorXd eta = design * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            probs[i] = clamp_probability(expit(eta[i]));
            resid[i] = static_cast<double>(z[i]) - probs[i];
            w[i] = probs[i] * (1.0 - probs[i]);
        }

        const Eigen::VectorXd score = design.transpose() * resid;
        const double score_scale = score.cwiseAbs().maxCoeff() / static_cast<double>(n);
        if (score_scale <= score_tol) {
            fit.converged = true;
            break;
        }

        // Fisher-scoring step (X'WX) delta = score. The score is the right
        // hand side here on purpose: it stays accurate as it shrinks, while
        // the weighted least-squares form loses the step in rounding noise
        // once the step is small.
        const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success) break;
        const Eigen::VectorXd delta = ldlt.solve(score);

        if (score_scale <= 1e5 * score_tol) {
            // Local regime: take the exact Newton step. The log likelihood is
            // already flat to double precision here while the score still has
            // digits to go, so a likelihood line search would freeze beta at
            // the wrong tolerance.
            beta += delta;
            ll = logistic_loglik(design, z, beta);
        } else {
            double step = 1.0;
            Eigen::VectorXd candidate = beta + delta;
            double candidate_ll = logistic_loglik(design, z, candidate);
            int halvings = 0;
            while (candidate_ll < ll && halvings < max_halvings) {
                step *= 0.5;
                candidate = beta + step * delta;
                candidate_ll = logistic_loglik(design, z, candidate);
                ++halvings;
            }
            if (candidate_ll < ll)
                break;  // no ascent left at numerical precision

            beta = candidate;
            ll = candidate_ll;
        }
        ++fit.iterations;

        if (beta.cwiseAbs().maxCoeff() > 1e6)
            throw Error(ErrorCode::Diverged,
                        "propensity coefficients exceed 1e6, likely separation");
    }

    if (!fit.converged) {
        const Eigen::VectorXd score = design.transpose() *
            (z.cast<double>() - predict_probability(design, beta));
        fit.converged = score.cwiseAbs().maxCoeff() / static_cast<double>(n) <= score_tol;
    }

    fit.beta = beta;
    fit.fitted = predict_probability(design, beta);
    return fit;
}

LinearFit fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    if (y.size() != design.rows())
        throw Error(ErrorCode::ConfigError, "outcome length does not match design rows");
    if (design.rows() < design.cols())
        throw Error(ErrorCode::TooFewObservations,
                    std::to_string(design.rows()) + " rows cannot identify " +
                        std::to_string(design.cols()) + " coefficients");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(pivot_threshold);
    if (qr.rank() < design.cols())
        throw Error(ErrorCode::RankDeficientDesign,
                    "design has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(design.cols()) + " columns");

    LinearFit fit;
    fit.alpha = qr.solve(y);
    return fit;
}

Eigen::MatrixXd logistic_score(const LogisticFit& fit, const Eigen::MatrixXd& design,
                               const Eigen::VectorXi& z) {
    return (z.cast<double>() - fit.fitted).asDiagonal() * design;
}

Eigen::MatrixXd ols_score(const LinearFit& fit, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& y) {
    return (y - design * fit.alpha).asDiagonal() * design;
}

} // namespace wate
