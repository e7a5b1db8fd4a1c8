#include "wate/glm.hpp"

#include "wate/error.hpp"
#include "wate/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace wate {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    throw std::logic_error("expected a wate::Error");
}

// Small logistic sample with one covariate, generated once from a fixed seed.
struct LogisticSample {
    Eigen::MatrixXd design;
    Eigen::VectorXi z;
};

LogisticSample make_logistic_sample(int n, std::uint64_t seed) {
    Rng rng(seed);
    LogisticSample s;
    s.design.resize(n, 2);
    s.z.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s.design(i, 0) = 1.0;
        s.design(i, 1) = x;
        s.z[i] = rng.bernoulli(expit(-0.4 + 0.9 * x));
    }
    return s;
}

TEST(FitLogistic, InterceptOnlyMatchesLogOdds) {
    const int n = 40, ones = 30;
    Eigen::MatrixXd design = Eigen::MatrixXd::Ones(n, 1);
    Eigen::VectorXi z(n);
    for (int i = 0; i < n; ++i) z[i] = i < ones ? 1 : 0;
    const LogisticFit fit = fit_logistic(design, z);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.beta[0], std::log(3.0), 1e-9);
    EXPECT_NEAR(fit.fitted[0], 0.75, 1e-10);
}

TEST(FitLogistic, MatchesGridSearchMaximum) {
    const LogisticSample s = make_logistic_sample(60, 2024);
    const LogisticFit fit = fit_logistic(s.design, s.z);
    ASSERT_TRUE(fit.converged);

    // Independent oracle: iteratively refined grid search over (b0, b1).
    double c0 = 0.0, c1 = 0.0, half = 3.0;
    double best0 = c0, best1 = c1;
    for (int round = 0; round < 8; ++round) {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = -15; i <= 15; ++i) {
            for (int j = -15; j <= 15; ++j) {
                Eigen::VectorXd b(2);
                b << c0 + half * i / 15.0, c1 + half * j / 15.0;
                const double ll = logistic_loglik(s.design, s.z, b);
                if (ll > best) {
                    best = ll;
                    best0 = b[0];
                    best1 = b[1];
                }
            }
        }
        c0 = best0;
        c1 = best1;
        half *= 0.2;
    }
    const double step = 3.0 * std::pow(0.2, 7) / 15.0;
    EXPECT_NEAR(fit.beta[0], best0, 2.0 * step);
    EXPECT_NEAR(fit.beta[1], best1, 2.0 * step);

    Eigen::VectorXd grid_beta(2);
    grid_beta << best0, best1;
    EXPECT_GE(logistic_loglik(s.design, s.z, fit.beta),
              logistic_loglik(s.design, s.z, grid_beta) - 1e-9);
}

TEST(FitLogistic, ScoreVanishesAtOptimum) {
    const LogisticSample s = make_logistic_sample(200, 7);
    const LogisticFit fit = fit_logistic(s.design, s.z);
    ASSERT_TRUE(fit.converged);
    const Eigen::VectorXd score = logistic_score(fit, s.design, s.z).colwise().sum();
    EXPECT_LE(score.lpNorm<Eigen::Infinity>() / s.design.rows(), 1e-10);
}

TEST(FitLogistic, FittedProbabilitiesAreClamped) {
    Eigen::MatrixXd design(6, 1);
    design << -900.0, -500.0, -100.0, 100.0, 500.0, 900.0;
    Eigen::VectorXd beta(1);
    beta << 1.0;
    const Eigen::VectorXd p = predict_probability(design, beta);
    for (int i = 0; i < p.size(); ++i) {
        EXPECT_GE(p[i], 1e-12);
        EXPECT_LE(p[i], 1.0 - 1e-12);
    }
    EXPECT_DOUBLE_EQ(p[0], 1e-12);
    EXPECT_DOUBLE_EQ(p[5], 1.0 - 1e-12);
}

TEST(FitLogistic, ErrorTaxonomy) {
    Eigen::MatrixXd design = Eigen::MatrixXd::Ones(10, 1);
    Eigen::VectorXi all_ones = Eigen::VectorXi::Ones(10);
    EXPECT_EQ(code_of([&] { fit_logistic(design, all_ones); }), ErrorCode::SingleClass);
    Eigen::VectorXi all_zero = Eigen::VectorXi::Zero(10);
    EXPECT_EQ(code_of([&] { fit_logistic(design, all_zero); }), ErrorCode::SingleClass);

    const LogisticSample s = make_logistic_sample(30, 3);
    Eigen::MatrixXd dup(30, 3);
    dup << s.design, s.design.col(1);
    EXPECT_EQ(code_of([&] { fit_logistic(dup, s.z); }), ErrorCode::RankDeficientDesign);
}

TEST(FitLogistic, SeparationStopsAtClampOrDiverges) {
    // Separated data on a unit covariate scale: the probability clamp caps the
    // ascent, so the score tolerance is met at a finite coefficient.
    Eigen::MatrixXd design(10, 2);
    Eigen::VectorXi z(10);
    for (int i = 0; i < 10; ++i) {
        const double x = i < 5 ? -(i + 1.0) : i - 4.0;
        design(i, 0) = 1.0;
        design(i, 1) = x;
        z[i] = x > 0 ? 1 : 0;
    }
    const LogisticFit fit = fit_logistic(design, z);
    EXPECT_TRUE(fit.converged);
    EXPECT_GT(std::abs(fit.beta[1]), 10.0);

    // The same separation on a 1e-5 covariate scale needs a coefficient
    // beyond the 1e6 bound before the clamp can bite.
    Eigen::MatrixXd tiny = design;
    tiny.col(1) *= 1e-5;
    EXPECT_EQ(code_of([&] { fit_logistic(tiny, z); }), ErrorCode::Diverged);
}

TEST(LogisticScore, MatchesFiniteDifferenceOfLoglik) {
    const LogisticSample s = make_logistic_sample(50, 17);
    Eigen::VectorXd beta(2);
    beta << 0.3, -0.8;
    LogisticFit at;
    at.beta = beta;
    at.fitted = predict_probability(s.design, beta);
    const Eigen::VectorXd score = logistic_score(at, s.design, s.z).colwise().sum();

    const double h = 1e-5;
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd up = beta, dn = beta;
        up[j] += h;
        dn[j] -= h;
        const double fd =
            (logistic_loglik(s.design, s.z, up) - logistic_loglik(s.design, s.z, dn)) / (2.0 * h);
        EXPECT_NEAR(score[j], fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

TEST(FitOls, ExactLineAndWhichArm) {
    Eigen::MatrixXd w(3, 2);
    w << 1, 0, 1, 1, 1, 2;
    Eigen::VectorXd y(3);
    y << 1, 3, 5;
    const LinearFit fit = fit_ols(w, y);
    EXPECT_NEAR(fit.alpha[0], 1.0, 1e-12);
    EXPECT_NEAR(fit.alpha[1], 2.0, 1e-12);
    EXPECT_EQ(fit.which_arm, -1);
}

TEST(FitOls, MatchesNormalEquationsWithExplicitInverse) {
    Rng rng(99);
    const int n = 30;
    Eigen::MatrixXd w(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        w(i, 0) = 1.0;
        w(i, 1) = rng.normal();
        w(i, 2) = rng.normal() + 0.5 * w(i, 1);
        y[i] = 2.0 - w(i, 1) + 0.3 * w(i, 2) + rng.normal();
    }
    const LinearFit fit = fit_ols(w, y);

    // Oracle: alpha = (W'W)^{-1} W'y with a cofactor-expansion 3x3 inverse.
    const Eigen::Matrix3d a = w.transpose() * w;
    const Eigen::Vector3d b = w.transpose() * y;
    Eigen::Matrix3d inv;
    const double det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                       a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                       a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
    ASSERT_NE(det, 0.0);
    inv(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / det;
    inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / det;
    inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / det;
    inv(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / det;
    inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / det;
    inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / det;
    inv(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / det;
    inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / det;
    inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / det;
    const Eigen::Vector3d oracle = inv * b;

    for (int j = 0; j < 3; ++j) EXPECT_NEAR(fit.alpha[j], oracle[j], 1e-8);
}

TEST(FitOls, ErrorTaxonomy) {
    Eigen::MatrixXd w(2, 3);
    w << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(2);
    y << 1, 2;
    EXPECT_EQ(code_of([&] { fit_ols(w, y); }), ErrorCode::TooFewObservations);

    Eigen::MatrixXd dup(4, 2);
    dup << 1, 2, 1, 2, 1, 2, 1, 2;
    Eigen::VectorXd y4(4);
    y4 << 1, 2, 3, 4;
    EXPECT_EQ(code_of([&] { fit_ols(dup, y4); }), ErrorCode::RankDeficientDesign);

    Eigen::VectorXd y3(3);
    y3 << 1, 2, 3;
    EXPECT_EQ(code_of([&] { fit_ols(dup, y3); }), ErrorCode::ConfigError);
}

TEST(OlsScore, MatchesFiniteDifferenceOfHalfRss) {
    Rng rng(5);
    const int n = 25;
    Eigen::MatrixXd w(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        w(i, 0) = 1.0;
        w(i, 1) = rng.normal();
        y[i] = 1.0 + 0.5 * w(i, 1) + rng.normal();
    }
    LinearFit at;
    at.alpha = Eigen::VectorXd(2);
    at.alpha << 0.7, -0.2;
    const Eigen::VectorXd score = ols_score(at, w, y).colwise().sum();

    const auto half_rss = [&](const Eigen::VectorXd& alpha) {
        return -0.5 * (y - w * alpha).squaredNorm();
    };
    const double h = 1e-5;
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd up = at.alpha, dn = at.alpha;
        up[j] += h;
        dn[j] -= h;
        const double fd = (half_rss(up) - half_rss(dn)) / (2.0 * h);
        EXPECT_NEAR(score[j], fd, 1e-4 * std::max(1.0, std::abs(fd)));
    }
}

} // namespace
} // namespace wate
