// End-to-end tests that drive the installed binary through std::system and
// inspect its files, exit codes, and report formats.

#include <gtest/gtest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return testing::TempDir() + "wate_cli_" + name;
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string base = temp_path("run_" + std::to_string(counter++));
    const std::string cmd =
        std::string(WATE_CLI_PATH) + " " + args + " > " + base + ".out 2> " + base + ".err";
    const int status = std::system(cmd.c_str());
    RunResult r;
    if (status != -1 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    r.out = slurp(base + ".out");
    r.err = slurp(base + ".err");
    return r;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

// Rows of the section introduced by "# <name>", excluding its header line.
std::vector<std::vector<std::string>> section_rows(const std::string& text,
                                                   const std::string& name) {
    std::vector<std::vector<std::string>> rows;
    bool in_section = false;
    bool past_header = false;
    for (const auto& line : split_lines(text)) {
        if (!line.empty() && line[0] == '#') {
            in_section = line == "# " + name;
            past_header = false;
            continue;
        }
        if (!in_section) continue;
        if (!past_header) {
            past_header = true;
            continue;
        }
        rows.push_back(split_fields(line));
    }
    return rows;
}

std::string packaged_csv() { return std::string(WATE_DATA_DIR) + "/fish_mercury.csv"; }

std::string estimate_args(const std::string& rest) {
    return "estimate --input " + packaged_csv() +
           " --treatment-col high_fish --outcome-col log2_mercury " + rest;
}

} // namespace

TEST(EstimateGrid, PackagedDatasetFullGridIsClean) {
    const RunResult r = run_cli(estimate_args(
        "--estimands ate,att,ato,atm,aten "
        "--methods sand,boot1,boot2,wbexp1,wbrad1,wbexp2,wbrad2 --replicates 60 --seed 19"));
    ASSERT_EQ(r.exit_code, 0) << r.err;

    const auto results = section_rows(r.out, "results");
    ASSERT_EQ(results.size(), 35u);
    for (const auto& row : results) {
        ASSERT_EQ(row.size(), 10u);
        EXPECT_EQ(row[9], "") << row[0] << "/" << row[1] << " failed: " << row[9];
        const double est = std::stod(row[2]);
        const double se = std::stod(row[3]);
        const double p = std::stod(row[4]);
        const double lo = std::stod(row[5]);
        const double up = std::stod(row[6]);
        EXPECT_TRUE(std::isfinite(est));
        EXPECT_TRUE(std::isfinite(se));
        EXPECT_GT(se, 0.0);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
        EXPECT_LT(lo, up);
        EXPECT_LT(lo, est);
        EXPECT_GT(up, est);
    }

    const auto ess = section_rows(r.out, "ess");
    ASSERT_EQ(ess.size(), 5u);
    const auto find_total = [&](const std::string& name) {
        for (const auto& row : ess)
            if (row[0] == name) return std::stod(row[3]);
        ADD_FAILURE() << "no ess row for " << name;
        return 0.0;
    };
    EXPECT_GT(find_total("ato"), find_total("aten"));
    EXPECT_GT(find_total("aten"), find_total("atm"));
    EXPECT_GT(find_total("atm"), find_total("att"));
    EXPECT_GT(find_total("att"), find_total("ate"));

    const auto balance = section_rows(r.out, "balance");
    EXPECT_EQ(balance.size(), 40u);  // 5 estimands x 8 covariates
    for (const auto& row : balance) {
        if (row[0] != "ato") continue;
        EXPECT_LT(std::stod(row[2]), 1e-10) << "ato out of balance on " << row[1];
    }

    const auto ps = section_rows(r.out, "propensity");
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_EQ(ps[0][0], "treated");
    EXPECT_EQ(ps[1][0], "control");
    EXPECT_EQ(std::stoi(ps[0][1]) + std::stoi(ps[1][1]), 1107);
}

TEST(Determinism, RepeatedEstimateRunsAreByteIdentical) {
    const std::string args = estimate_args(
        "--estimands ato,att --methods boot1,wbexp2,sand --replicates 50 --seed 4242");
    const std::string out1 = temp_path("det_a.csv");
    const std::string out2 = temp_path("det_b.csv");
    ASSERT_EQ(run_cli(args + " --out " + out1).exit_code, 0);
    ASSERT_EQ(run_cli(args + " --out " + out2).exit_code, 0);
    const std::string a = slurp(out1);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(out2));
}

TEST(Determinism, SimulateOutputIndependentOfThreadCount) {
    const std::string args =
        "simulate --model 2 --n 150 --estimands ate,ato --methods sand,boot1 "
        "--mc-reps 4 --replicates 30 --seed 99";
    const std::string out1 = temp_path("thr_1.csv");
    const std::string out2 = temp_path("thr_2.csv");
    ASSERT_EQ(run_cli(args + " --threads 1 --out " + out1).exit_code, 0);
    ASSERT_EQ(run_cli(args + " --threads 3 --out " + out2).exit_code, 0);
    const std::string a = slurp(out1);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(out2));
}

TEST(ExitCodes, ConfigErrorsExitNonzeroAndWriteNothing) {
    const std::string out = temp_path("should_not_exist.csv");
    std::filesystem::remove(out);

    EXPECT_NE(run_cli(estimate_args("--estimands bogus --out " + out)).exit_code, 0);
    EXPECT_FALSE(std::filesystem::exists(out));

    EXPECT_NE(
        run_cli(estimate_args("--estimands ate --methods boot1 --replicates 1 --out " + out))
            .exit_code,
        0);
    EXPECT_FALSE(std::filesystem::exists(out));

    EXPECT_NE(run_cli(estimate_args("--estimands ate --alpha 1.0 --out " + out)).exit_code, 0);
    EXPECT_FALSE(std::filesystem::exists(out));

    EXPECT_NE(run_cli(estimate_args("--ps-covariates nonexistent --out " + out)).exit_code, 0);
    EXPECT_FALSE(std::filesystem::exists(out));

    // missing required --input
    EXPECT_NE(run_cli("estimate --estimands ate").exit_code, 0);
    // unknown subcommand
    EXPECT_NE(run_cli("frobnicate").exit_code, 0);
    // simulate model out of range
    EXPECT_NE(run_cli("simulate --model 9 --estimands ate --methods sand").exit_code, 0);
}

TEST(ExitCodes, EstimationFailuresAreReportedInsideTheOutput) {
    const std::string csv = temp_path("all_treated.csv");
    {
        std::ofstream f(csv);
        f << "treatment,outcome,x\n";
        for (int i = 0; i < 30; ++i) f << "1," << 0.1 * i << ',' << i << '\n';
    }
    const RunResult r = run_cli("estimate --input " + csv +
                                " --estimands ate,ato --methods sand,boot1 --replicates 20");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto results = section_rows(r.out, "results");
    ASSERT_EQ(results.size(), 4u);
    for (const auto& row : results) {
        ASSERT_EQ(row.size(), 10u);
        EXPECT_EQ(row[2], "");  // no point estimate
        EXPECT_EQ(row[9], "SingleClass");
    }
    EXPECT_TRUE(section_rows(r.out, "ess").empty());
}

TEST(SimulateOutput, HeaderAndRowEchoConfiguration) {
    const RunResult r = run_cli(
        "simulate --model 2 --n 120 --effect homogeneous --scenario a2 "
        "--estimands ate --methods sand,wbrad1 --mc-reps 3 --replicates 25 --seed 1234");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto lines = split_lines(r.out);
    ASSERT_GT(lines.size(), 3u);
    EXPECT_EQ(lines[2],
              "model,n,effect,scenario,estimand,method,arbias_pct,rmse,esd,"
              "median_se,median_re,cp,failures,M,R,seed");
    ASSERT_EQ(lines.size(), 5u);
    for (std::size_t i = 3; i < lines.size(); ++i) {
        const auto row = split_fields(lines[i]);
        ASSERT_EQ(row.size(), 16u);
        EXPECT_EQ(row[0], "2");
        EXPECT_EQ(row[1], "120");
        EXPECT_EQ(row[2], "homogeneous");
        EXPECT_EQ(row[3], "a2");
        EXPECT_EQ(row[4], "ate");
        EXPECT_EQ(row[13], "3");
        EXPECT_EQ(row[14], "25");
        EXPECT_EQ(row[15], "1234");
    }
    EXPECT_EQ(split_fields(lines[3])[5], "sand");
    EXPECT_EQ(split_fields(lines[4])[5], "wbrad1");
}

TEST(JsonOutput, ParsesAndAgreesWithCsv) {
    const std::string shared =
        "--estimands ate,ato --methods sand,wbexp1 --replicates 40 --seed 77";
    const RunResult csv = run_cli(estimate_args(shared + " --format csv"));
    const RunResult js = run_cli(estimate_args(shared + " --format json"));
    ASSERT_EQ(csv.exit_code, 0);
    ASSERT_EQ(js.exit_code, 0);

    const nlohmann::json j = nlohmann::json::parse(js.out);
    EXPECT_EQ(j.at("tool"), "wate");
    EXPECT_EQ(j.at("n"), 1107);
    EXPECT_EQ(j.at("n_treated"), 420);
    ASSERT_TRUE(j.at("results").contains("ate"));
    ASSERT_TRUE(j.at("results").contains("ato"));

    const auto rows = section_rows(csv.out, "results");
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& row : rows) {
        const auto& cell = j.at("results").at(row[0]).at("methods").at(row[1]);
        EXPECT_EQ(std::stod(row[2]), j.at("results").at(row[0]).at("estimate").get<double>());
        EXPECT_EQ(std::stod(row[3]), cell.at("se").get<double>());
        EXPECT_EQ(std::stod(row[6]), cell.at("ci_upper").get<double>());
    }

    const auto& ess = j.at("diagnostics").at("ess");
    EXPECT_GT(ess.at("ato").at("total").get<double>(), ess.at("ate").at("total").get<double>());
}

TEST(TruthOutput, HomogeneousValuesAreExactAndPseudoRowsAppear) {
    const RunResult r = run_cli(
        "truth --model 2 --effect homogeneous --scenario a1 --estimands ate,ato "
        "--n 100000 --seed 5");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto lines = split_lines(r.out);
    ASSERT_EQ(lines.size(), 7u);  // two comment lines, column header, 2 true + 2 pseudo rows
    EXPECT_EQ(lines[2], "model,effect,scenario,estimand,kind,n_super,seed,value");
    int true_rows = 0, pseudo_rows = 0;
    for (std::size_t i = 3; i < lines.size(); ++i) {
        const auto row = split_fields(lines[i]);
        ASSERT_EQ(row.size(), 8u);
        EXPECT_EQ(row[0], "2");
        EXPECT_EQ(row[1], "homogeneous");
        EXPECT_EQ(row[5], "100000");
        if (row[4] == "true") {
            ++true_rows;
            EXPECT_EQ(row[2], "");
            EXPECT_EQ(row[7], "4");  // constant shift of 4, exact at any size
        } else {
            ++pseudo_rows;
            EXPECT_EQ(row[4], "pseudo");
            EXPECT_EQ(row[2], "a1");
            const double v = std::stod(row[7]);
            EXPECT_NEAR(v, 4.0, 0.25);  // correctly specified models recover the shift
        }
    }
    EXPECT_EQ(true_rows, 2);
    EXPECT_EQ(pseudo_rows, 2);
}

TEST(VersionFlag, PrintsToolAndVersion) {
    const RunResult r = run_cli("--version");
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, "wate 0.1.0\n");
}
