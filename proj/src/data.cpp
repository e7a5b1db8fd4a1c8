#include "wate/data.hpp"

#include "wate/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace wate {

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

bool parse_double(const std::string& raw, double& out) {
    const std::string s = trimmed(raw);
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

void format_double(std::ostream& out, double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    out.write(buf, ptr - buf);
}

} // namespace

Dataset::Dataset(std::vector<int> z,
                 Eigen::VectorXd y,
                 Eigen::MatrixXd covariates,
                 std::vector<std::string> covariate_names)
    : z_(std::move(z)),
      y_(std::move(y)),
      covariates_(std::move(covariates)),
      covariate_names_(std::move(covariate_names)) {
    const auto n = static_cast<Eigen::Index>(z_.size());
    if (n < 2)
        throw Error(ErrorCode::DomainError, "dataset needs at least 2 rows, got " + std::to_string(n));
    if (y_.size() != n)
        throw Error(ErrorCode::DomainError, "outcome length " + std::to_string(y_.size()) +
                                                " does not match treatment length " + std::to_string(n));
    if (covariates_.rows() != n)
        throw Error(ErrorCode::DomainError, "covariate rows " + std::to_string(covariates_.rows()) +
                                                " do not match treatment length " + std::to_string(n));
    if (static_cast<Eigen::Index>(covariate_names_.size()) != covariates_.cols())
        throw Error(ErrorCode::DomainError, "covariate name count does not match covariate columns");
    for (std::size_t i = 0; i < z_.size(); ++i) {
        if (z_[i] != 0 && z_[i] != 1)
            throw Error(ErrorCode::NonBinaryTreatment,
                        "treatment value " + std::to_string(z_[i]) + " at row " + std::to_string(i));
        n_treated_ += z_[i];
    }
    if (!y_.allFinite())
        throw Error(ErrorCode::DomainError, "outcome contains a non-finite value");
    if (!covariates_.allFinite())
        throw Error(ErrorCode::DomainError, "covariates contain a non-finite value");
}

Dataset load_csv(const std::string& path,
                 const std::string& treatment_col,
                 const std::string& outcome_col) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::ParseError, path + " is empty");

    // Strip a UTF-8 byte-order mark if present.
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);

    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trimmed(h);

    int treat_idx = -1;
    int outcome_idx = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == treatment_col) {
            if (treat_idx >= 0)
                throw Error(ErrorCode::ParseError, "duplicate column '" + treatment_col + "' in header");
            treat_idx = static_cast<int>(j);
        }
        if (header[j] == outcome_col) {
            if (outcome_idx >= 0)
                throw Error(ErrorCode::ParseError, "duplicate column '" + outcome_col + "' in header");
            outcome_idx = static_cast<int>(j);
        }
    }
    if (treat_idx < 0)
        throw Error(ErrorCode::MissingColumn, "treatment column '" + treatment_col + "' not in header");
    if (outcome_idx < 0)
        throw Error(ErrorCode::MissingColumn, "outcome column '" + outcome_col + "' not in header");
    if (treat_idx == outcome_idx)
        throw Error(ErrorCode::ConfigError, "treatment and outcome refer to the same column");

    std::vector<std::string> names;
    std::vector<int> cov_cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (static_cast<int>(j) == treat_idx || static_cast<int>(j) == outcome_idx) continue;
        names.push_back(header[j]);
        cov_cols.push_back(static_cast<int>(j));
    }

    std::vector<int> z;
    std::vector<double> y;
    std::vector<double> xflat;
    int file_line = 1;
    while (std::getline(in, line)) {
        ++file_line;
        if (trimmed(line).empty()) continue;
        std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size())
            throw Error(ErrorCode::NonNumericCell,
                        "row " + std::to_string(file_line) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size()));

        const std::string zs = trimmed(fields[static_cast<std::size_t>(treat_idx)]);
        if (zs == "0") {
            z.push_back(0);
        } else if (zs == "1") {
            z.push_back(1);
        } else {
            throw Error(ErrorCode::NonBinaryTreatment,
                        "value '" + zs + "' in column '" + treatment_col + "' at row " +
                            std::to_string(file_line));
        }

        double val = 0.0;
        if (!parse_double(fields[static_cast<std::size_t>(outcome_idx)], val) || !std::isfinite(val))
            throw Error(ErrorCode::NonNumericCell,
                        "column '" + outcome_col + "' at row " + std::to_string(file_line));
        y.push_back(val);

        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            if (!parse_double(fields[static_cast<std::size_t>(cov_cols[k])], val) || !std::isfinite(val))
                throw Error(ErrorCode::NonNumericCell,
                            "column '" + names[k] + "' at row " + std::to_string(file_line));
            xflat.push_back(val);
        }
    }

    const auto n = static_cast<Eigen::Index>(z.size());
    const auto p = static_cast<Eigen::Index>(names.size());
    Eigen::VectorXd yv(n);
    for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            x(i, j) = xflat[static_cast<std::size_t>(i * p + j)];

    return Dataset(std::move(z), std::move(yv), std::move(x), std::move(names));
}

void write_csv(const Dataset& ds, std::ostream& out) {
    out << "treatment,outcome";
    for (const auto& name : ds.covariate_names()) out << ',' << name;
    out << '\n';
    for (int i = 0; i < ds.n(); ++i) {
        out << ds.z()[static_cast<std::size_t>(i)] << ',';
        format_double(out, ds.y()[i]);
        for (int j = 0; j < ds.n_covariates(); ++j) {
            out << ',';
            format_double(out, ds.covariates()(i, j));
        }
        out << '\n';
    }
}

void write_csv_file(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::ParseError, "cannot write " + path);
    write_csv(ds, out);
}

Eigen::MatrixXd design_matrix_from(const Eigen::MatrixXd& covariates, const DesignSpec& spec) {
    const Eigen::Index p = covariates.cols();
    std::vector<bool> seen(static_cast<std::size_t>(p), false);
    for (int idx : spec.column_indices) {
        if (idx < 0 || idx >= p)
            throw Error(ErrorCode::IndexOutOfRange,
                        "covariate index " + std::to_string(idx) + " outside [0," + std::to_string(p) + ")");
        if (seen[static_cast<std::size_t>(idx)])
            throw Error(ErrorCode::IndexOutOfRange, "duplicate covariate index " + std::to_string(idx));
        seen[static_cast<std::size_t>(idx)] = true;
    }

    const Eigen::Index k = static_cast<Eigen::Index>(spec.column_indices.size());
    const Eigen::Index offset = spec.include_intercept ? 1 : 0;
    Eigen::MatrixXd design(covariates.rows(), k + offset);
    if (spec.include_intercept) design.col(0).setOnes();
    for (Eigen::Index j = 0; j < k; ++j)
        design.col(j + offset) = covariates.col(spec.column_indices[static_cast<std::size_t>(j)]);
    return design;
}

Eigen::MatrixXd design_matrix(const Dataset& ds, const DesignSpec& spec) {
    return design_matrix_from(ds.covariates(), spec);
}

} // namespace wate
