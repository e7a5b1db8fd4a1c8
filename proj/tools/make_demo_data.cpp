// Generates the packaged demo dataset: a synthetic survey relating high fish
// consumption to log2 blood mercury level in 1107 adults.
//
// The assignment mechanism is deliberately not logistic-linear in the stored
// covariates: older graduates are under-assigned and young smokers
// over-assigned relative to the linear score, so a fitted propensity model
// faces realistic overlap stress (treated units in its low tail, a cluster of
// controls in its high range). Income is recorded in thousands of dollars and
// is missing for about 12% of respondents, flagged by income_missing.

#include "wate/stats.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace {

struct Person {
    int gender;        // 1 = female
    int age;           // years, 20-79
    int race;          // coded 1..5
    double income_k;   // household income in $1000, 0 when missing
    int income_missing;
    int education;     // coded 1..5
    int smoker;        // ever-smoker flag
    int cigarettes;    // smoked in the past month
    double lp;         // linear part of the assignment score
    double shift;      // assignment shift the linear score does not carry
    double inc_s;      // centered log income, 0 when missing
    int high_fish;
    double log2_mercury;
};

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <output.csv>\n", argv[0]);
        return 2;
    }

    const std::uint64_t seed = 20130914;
    const int n = 1107;
    const double spread = 3.2;
    const double treated_share = 0.40;
    wate::Rng rng(seed);

    std::vector<Person> people(n);
    for (auto& p : people) {
        p.gender = rng.bernoulli(0.52);
        p.age = 20 + static_cast<int>(60.0 * rng.uniform());
        const double ur = rng.uniform();
        p.race = ur < 0.16 ? 1 : ur < 0.38 ? 2 : ur < 0.62 ? 3 : ur < 0.86 ? 4 : 5;
        p.income_missing = rng.bernoulli(0.12);
        p.education = std::min(5, 1 + static_cast<int>(5.0 * rng.uniform()));
        const double li = 10.2 + 0.18 * p.education + 0.4 * rng.normal();
        const double income_dollars =
            p.income_missing ? 0.0 : std::round(std::exp(li) / 100.0) * 100.0;
        p.income_k = income_dollars / 1000.0;
        p.smoker = rng.bernoulli(0.38);
        p.cigarettes = p.smoker ? static_cast<int>(450.0 * rng.uniform() * rng.uniform()) : 0;

        const double age_s = (p.age - 50.0) / 15.0;
        p.inc_s = p.income_missing ? 0.0 : (std::log(income_dollars + 1.0) - 11.0);
        p.lp = 0.55 * age_s + 0.35 * (p.gender == 0) + 0.30 * p.inc_s +
               0.25 * (p.education - 3) + 0.35 * (p.race == 5) - 0.30 * p.smoker -
               0.002 * p.cigarettes + 0.25 * (p.race == 2);
        p.shift = 0.0;
        if (p.age >= 62 && p.education >= 4)
            p.shift = -2.0;
        else if (p.age <= 27 && p.smoker == 1)
            p.shift = 4.0;
    }

    // center the score so the marginal treated share lands on target
    double lo = -8.0, hi = 4.0;
    for (int it = 0; it < 200; ++it) {
        const double c0 = 0.5 * (lo + hi);
        double acc = 0.0;
        for (const auto& p : people) acc += wate::expit(c0 + spread * p.lp + p.shift);
        (acc / n < treated_share ? lo : hi) = c0;
    }
    const double c0 = 0.5 * (lo + hi);

    for (auto& p : people) {
        p.high_fish = rng.bernoulli(wate::expit(c0 + spread * p.lp + p.shift));
        const double age_s = (p.age - 50.0) / 15.0;
        const double effect = 1.9 + 0.1 * age_s + 0.15 * p.gender;
        const double base = 0.9 + 0.35 * age_s + 0.25 * (p.race == 5) + 0.15 * p.inc_s -
                            0.10 * p.smoker + 0.2 * (p.gender == 0);
        const double y = base + effect * p.high_fish + 0.9 * rng.normal();
        p.log2_mercury = std::round(y * 10000.0) / 10000.0;
    }

    std::ofstream out(argv[1], std::ios::binary);
    if (!out) {
        std::fprintf(stderr, "cannot open %s for writing\n", argv[1]);
        return 1;
    }
    out << "gender,age,race,income,income_missing,education,smoker,cigarettes,high_fish,"
           "log2_mercury\n";
    char buf[64];
    int treated = 0;
    for (const auto& p : people) {
        treated += p.high_fish;
        std::snprintf(buf, sizeof buf, "%.1f,%d,%d,%d,%d", p.income_k, p.income_missing,
                      p.education, p.smoker, p.cigarettes);
        out << p.gender << ',' << p.age << ',' << p.race << ',' << buf << ','
            << p.high_fish << ',';
        std::snprintf(buf, sizeof buf, "%.4f", p.log2_mercury);
        out << buf << '\n';
    }
    std::printf("wrote %s: %d rows, %d treated\n", argv[1], n, treated);
    return 0;
}
