#pragma once

#include <string>
#include <utility>

namespace wate {

// Weighted-average-treatment-effect estimand, identified by its tilting
// function g(e) over the propensity score e:
//   ATE  g=1            ATT  g=e          ATC  g=1-e
//   ATO  g=e(1-e)       ATM  g=min(e,1-e)
//   ATEN g=-e*ln(e)-(1-e)*ln(1-e)
//   TRIM g=1(alpha<=e<=1-alpha), alpha in (0,0.5)
struct Estimand {
    enum class Kind { ate, att, atc, ato, atm, aten, trim };

    Kind kind = Kind::ate;
    double trim_alpha = 0.0;

    static Estimand trim(double alpha);

    bool operator==(const Estimand&) const = default;
};

// Accepts "ate","att","atc","ato","atm","aten","trim:<alpha>".
Estimand parse_estimand(const std::string& text);
std::string to_string(const Estimand& est);

double tilt(const Estimand& est, double e);

// dg/de; conventions: 0 everywhere for ATE and TRIM (a.e. derivative),
// the subgradient midpoint 0 for ATM at e = 0.5.
double tilt_derivative(const Estimand& est, double e);

// (w0, w1) = (g/(1-e), g/e): the balancing weights for control and treated.
std::pair<double, double> balance_weights(const Estimand& est, double e);

// d g(expit(v'b)) / d b = tilt_derivative(e) * e * (1-e) * v; this returns
// the scalar factor tilt_derivative(e) * e * (1-e) multiplying v.
double tilt_beta_gradient_factor(const Estimand& est, double e);

} // namespace wate

