#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace wate {

// Immutable observational dataset: binary treatment z, outcome y, and an
// N x p covariate matrix with column names. All values are validated at
// construction; arms are allowed to be empty here (degenerate bootstrap
// replicates) and are checked by the fitting operations instead.
class Dataset {
public:
    Dataset(std::vector<int> z,
            Eigen::VectorXd y,
            Eigen::MatrixXd covariates,
            std::vector<std::string> covariate_names);

    int n() const { return static_cast<int>(z_.size()); }
    int n_covariates() const { return static_cast<int>(covariates_.cols()); }
    int n_treated() const { return n_treated_; }
    int n_control() const { return n() - n_treated_; }

    const std::vector<int>& z() const { return z_; }
    const Eigen::VectorXd& y() const { return y_; }
    const Eigen::MatrixXd& covariates() const { return covariates_; }
    const std::vector<std::string>& covariate_names() const { return covariate_names_; }

private:
    std::vector<int> z_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd covariates_;
    std::vector<std::string> covariate_names_;
    int n_treated_ = 0;
};

// Ordered covariate column selection for a regression design; an intercept
// column is always prepended.
struct DesignSpec {
    std::vector<int> column_indices;
    bool include_intercept = true;

    int n_terms() const {
        return static_cast<int>(column_indices.size()) + (include_intercept ? 1 : 0);
    }
};

// CSV ingestion: UTF-8, comma-separated, header row required, '.' decimal
// separator. The treatment column must contain exactly "0"/"1"; all other
// referenced columns must parse to finite reals. Covariates are every column
// except treatment and outcome, in header order.
Dataset load_csv(const std::string& path,
                 const std::string& treatment_col,
                 const std::string& outcome_col);

// Writes columns treatment,outcome,<covariates...> with shortest
// round-trippable number formatting, so load_csv(write_csv(ds)) reproduces
// the dataset bit-exactly.
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv_file(const Dataset& ds, const std::string& path);

// N x (k+1) design matrix: column 0 is the constant 1, columns 1..k are the
// selected covariates in spec order.
Eigen::MatrixXd design_matrix(const Dataset& ds, const DesignSpec& spec);

// Same construction from a raw covariate matrix (used by bootstrap replicates
// that carry resampled rows without re-wrapping them in a Dataset).
Eigen::MatrixXd design_matrix_from(const Eigen::MatrixXd& covariates, const DesignSpec& spec);

} // namespace wate

