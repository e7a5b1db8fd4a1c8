#pragma once

#include "wate/simulation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wate {

const char* version();

// Shortest round-trip decimal form; infinities and NaN spelled "inf"/"nan".
std::string format_number(double x);

struct MethodCell {
    std::string method;
    bool ok = false;
    std::string error;
    double se = 0.0;
    double p_value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    int replicates_used = 0;
    int failures = 0;
};

struct EstimandBlock {
    std::string estimand;
    bool point_ok = false;
    std::string point_error;
    double tau_hat = 0.0;
    double ess_treated = 0.0;
    double ess_control = 0.0;
    std::vector<double> asmd;
    std::vector<MethodCell> methods;
};

struct ArmPropensitySummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct EstimateReport {
    std::string config;
    int n = 0;
    int n_treated = 0;
    double alpha = 0.05;
    std::vector<std::string> covariates;
    ArmPropensitySummary ps_treated;
    ArmPropensitySummary ps_control;
    std::vector<EstimandBlock> estimands;
};

struct SimulateReport {
    std::string config;
    std::vector<MetricsRow> rows;
};

struct TruthRow {
    int model_id = 0;
    std::string effect;
    std::string scenario;   // empty for plain truths
    std::string estimand;
    std::string kind;       // "true" or "pseudo"
    std::size_t n_super = 0;
    std::uint64_t seed = 0;
    double value = 0.0;
};

struct TruthReport {
    std::string config;
    std::vector<TruthRow> rows;
};

std::string render_csv(const EstimateReport& report);
std::string render_json(const EstimateReport& report);
std::string render_csv(const SimulateReport& report);
std::string render_json(const SimulateReport& report);
std::string render_csv(const TruthReport& report);
std::string render_json(const TruthReport& report);

} // namespace wate
