#pragma once

// Ordinary least squares with coefficient inference, bidirectional stepwise
// selection and drop-one dummy encoding.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rfuzzy::regression {

/// Feature matrix without the intercept column (added implicitly by fit_ols).
struct DesignMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd values;  // rows = observations

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }

    DesignMatrix select(std::span<const std::size_t> columns) const;
    static DesignMatrix from_columns(std::vector<std::string> names, const std::vector<std::vector<double>>& columns);
};

struct OlsFit {
    std::vector<std::string> names;  // feature names, intercept excluded
    Eigen::VectorXd coefficients;    // [intercept, beta_1 .. beta_p]
    Eigen::VectorXd std_errors;
    Eigen::VectorXd t_stats;
    Eigen::VectorXd p_values;  // two-sided, Student t with `dof`
    Eigen::VectorXd residuals;
    double rss = 0.0;
    double r_squared = 0.0;
    int dof = 0;

    double intercept() const { return coefficients[0]; }
    double predict(std::span<const double> x) const;
};

/// Least squares through a column-pivoted Householder QR of the column-scaled
/// design. Requires rows > columns + 1. Throws NumericError naming the
/// dependent columns when the design is rank deficient.
OlsFit fit_ols(const DesignMatrix& x, std::span<const double> y);

double predict_ols(const OlsFit& fit, std::span<const double> x);

/// Two-sided p-value of a t statistic (regularized incomplete beta route).
double student_t_two_sided_p(double t, double dof);

struct StepwiseConfig {
    double p_enter = 0.05;
    double p_remove = 0.10;
};

struct StepwiseStep {
    std::string action;  // "enter" or "remove"
    std::string column;
    double p_value;
};

struct StepwiseResult {
    std::vector<std::size_t> selected;  // indices into the candidate matrix, ascending
    std::vector<std::string> selected_names;
    OlsFit fit;
    std::vector<StepwiseStep> trace;
    std::string variant = "bidirectional";
};

/// Forward entry / backward removal on coefficient p-values (equivalently
/// partial F) until the selection stops changing. Ties go to the lowest
/// p-value, then the earliest declared column. May return an intercept-only
/// model.
StepwiseResult stepwise_select(const DesignMatrix& candidates, std::span<const double> y,
                               StepwiseConfig config = {});

struct DummyColumns {
    std::vector<std::string> names;
    std::vector<int> levels;  // category encoded by each column
    std::vector<std::vector<double>> columns;
};

/// One 0/1 indicator column per non-baseline category, categories ascending.
/// Throws DataError for fewer than two distinct categories or an absent baseline.
DummyColumns encode_dummies(std::span<const int> values, int baseline, std::string_view prefix = "ResourceLevel");

}  // namespace rfuzzy::regression
