#include "wate/estimands.hpp"

#include "wate/error.hpp"

#include <charconv>
#include <cmath>

namespace wate {

namespace {

void check_probability(double e) {
    if (!(e > 0.0 && e < 1.0))
        throw Error(ErrorCode::DomainError,
                    "propensity score " + std::to_string(e) + " outside (0,1)");
}

} // namespace

Estimand Estimand::trim(double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw Error(ErrorCode::DomainError,
                    "trim threshold " + std::to_string(alpha) + " outside (0,0.5)");
    Estimand est;
    est.kind = Kind::trim;
    est.trim_alpha = alpha;
    return est;
}

Estimand parse_estimand(const std::string& text) {
    if (text == "ate") return {Estimand::Kind::ate, 0.0};
    if (text == "att") return {Estimand::Kind::att, 0.0};
    if (text == "atc") return {Estimand::Kind::atc, 0.0};
    if (text == "ato") return {Estimand::Kind::ato, 0.0};
    if (text == "atm") return {Estimand::Kind::atm, 0.0};
    if (text == "aten") return {Estimand::Kind::aten, 0.0};
    if (text.rfind("trim:", 0) == 0) {
        const std::string num = text.substr(5);
        double alpha = 0.0;
        const char* begin = num.data();
        const char* end = begin + num.size();
        auto [ptr, ec] = std::from_chars(begin, end, alpha);
        if (ec != std::errc() || ptr != end)
            throw Error(ErrorCode::ConfigError, "cannot parse trim threshold in '" + text + "'");
        return Estimand::trim(alpha);
    }
    throw Error(ErrorCode::ConfigError, "unknown estimand '" + text + "'");
}

std::string to_string(const Estimand& est) {
    switch (est.kind) {
        case Estimand::Kind::ate: return "ate";
        case Estimand::Kind::att: return "att";
        case Estimand::Kind::atc: return "atc";
        case Estimand::Kind::ato: return "ato";
        case Estimand::Kind::atm: return "atm";
        case Estimand::Kind::aten: return "aten";
        case Estimand::Kind::trim: {
            char buf[32];
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), est.trim_alpha);
            (void)ec;
            return "trim:" + std::string(buf, ptr);
        }
    }
    return "?";
}

double tilt(const Estimand& est, double e) {
    check_probability(e);
    switch (est.kind) {
        case Estimand::Kind::ate: return 1.0;
        case Estimand::Kind::att: return e;
        case Estimand::Kind::atc: return 1.0 - e;
        case Estimand::Kind::ato: return e * (1.0 - e);
        case Estimand::Kind::atm: return std::min(e, 1.0 - e);
        case Estimand::Kind::aten: return -e * std::log(e) - (1.0 - e) * std::log1p(-e);
        case Estimand::Kind::trim:
            return (e >= est.trim_alpha && e <= 1.0 - est.trim_alpha) ? 1.0 : 0.0;
    }
    return 0.0;
}

double tilt_derivative(const Estimand& est, double e) {
    check_probability(e);
    switch (est.kind) {
        case Estimand::Kind::ate: return 0.0;
        case Estimand::Kind::att: return 1.0;
        case Estimand::Kind::atc: return -1.0;
        case Estimand::Kind::ato: return 1.0 - 2.0 * e;
        case Estimand::Kind::atm:
            if (e < 0.5) return 1.0;
            if (e > 0.5) return -1.0;
            return 0.0;
        case Estimand::Kind::aten: return std::log1p(-e) - std::log(e);
        case Estimand::Kind::trim: return 0.0;
    }
    return 0.0;
}

std::pair<double, double> balance_weights(const Estimand& est, double e) {
    const double g = tilt(est, e);
    return {g / (1.0 - e), g / e};
}

double tilt_beta_gradient_factor(const Estimand& est, double e) {
    return tilt_derivative(est, e) * e * (1.0 - e);
}

} // namespace wate
