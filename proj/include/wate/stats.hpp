#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace wate {

// ---------------------------------------------------------------------------
// Scalar statistics
// ---------------------------------------------------------------------------

double mean(const std::vector<double>& v);

// Sample variance with the n-1 denominator; 0 for fewer than 2 elements.
double sample_variance(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);

// Midpoint-of-central-pair convention for even lengths.
double median(std::vector<double> v);

// Linear-interpolation quantile (R type 7): h = (n-1)p, value interpolated
// between the floor(h)-th and next order statistics.
double quantile_type7(std::vector<double> v, double p);

// quantile_type7(0.75) - quantile_type7(0.25)
double interquartile_range(const std::vector<double>& v);

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

double normal_cdf(double x);
double normal_quantile(double p);

// Two-sided p-value for a z statistic: 2*(1 - Phi(|z|)).
double two_sided_p_value(double z);

// Numerically stable 1/(1+exp(-x)).
double expit(double x);

// ---------------------------------------------------------------------------
// Reproducible stream derivation
// ---------------------------------------------------------------------------
//
// Streams are derived, not sequenced: the stream for task index i is a pure
// function of (master seed, i), so replicate results cannot depend on
// execution order or worker count. Derivation nests: a replicate derives its
// own child streams the same way.

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return unif_(gen_); }
    double normal() { return norm_(gen_); }
    double exponential1() { return exp_(gen_); }
    double rademacher() { return (gen_() & 1u) ? 1.0 : -1.0; }
    int bernoulli(double p) { return uniform() < p ? 1 : 0; }

    // Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> d(0, n - 1);
        return d(gen_);
    }

private:
    std::mt19937_64 gen_;
    std::uniform_real_distribution<double> unif_{0.0, 1.0};
    std::normal_distribution<double> norm_{0.0, 1.0};
    std::exponential_distribution<double> exp_{1.0};
};

} // namespace wate

