#pragma once

#include <Eigen/Dense>

namespace wate {

struct LogisticFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd fitted;   // expit(design * beta), clamped to [1e-12, 1 - 1e-12]
    bool converged = false;
    int iterations = 0;
};

struct LinearFit {
    Eigen::VectorXd alpha;
    int which_arm = -1;       // 0, 1, or -1 when not tied to a treatment arm
};

// Bernoulli log-likelihood at beta; stable for large |linear predictor|.
double logistic_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXi& z,
                       const Eigen::VectorXd& beta);

// expit(design * beta) clamped to [1e-12, 1 - 1e-12].
Eigen::VectorXd predict_probability(const Eigen::MatrixXd& design, const Eigen::VectorXd& beta);

// IRLS with step-halving. Converged when max |score| / N <= 1e-10 within 100
// iterations. Throws SingleClass, RankDeficientDesign, Diverged.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXi& z);

// Least squares via column-pivoted QR. Throws TooFewObservations, RankDeficientDesign.
LinearFit fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

// Row i = (z_i - fitted_i) * design_i.
Eigen::MatrixXd logistic_score(const LogisticFit& fit, const Eigen::MatrixXd& design,
                               const Eigen::VectorXi& z);

// Row i = (y_i - design_i' alpha) * design_i.
Eigen::MatrixXd ols_score(const LinearFit& fit, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& y);

} // namespace wate
