#pragma once

// Unbiased accuracy criteria: MAE, MBRE, MIBRE, ME, and the random-guessing
// baseline behind standardized accuracy (SA) and effect size.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfuzzy::metrics {

struct ErrorMetrics {
    double mae = 0.0;
    double mbre = 0.0;
    double mibre = 0.0;
    double me = 0.0;  // mean of (actual - predicted); > 0 means underestimation
};

/// Throws DataError for mismatched or empty sequences, non-positive actuals,
/// and NumericError naming the pair when min(actual, predicted) is zero.
ErrorMetrics compute_error_metrics(std::span<const double> actual, std::span<const double> predicted);

struct GuessBaseline {
    double mae_p_bar = 0.0;  // mean MAE over the guessing runs
    double sp0 = 0.0;        // sample standard deviation of the run MAEs
    int runs = 0;
    std::uint64_t seed = 0;
    double exact_mean = 0.0;  // expectation over all ordered pairs i != j
    bool degenerate = false;  // all actuals equal
};

/// Each run predicts case i by the actual of a uniformly drawn case j != i.
/// Run r draws from its own generator seeded from (seed, r).
GuessBaseline random_guess_baseline(std::span<const double> actuals, int runs = 1000, std::uint64_t seed = 1);

/// Mean of |e_i - e_j| over ordered pairs i != j.
double exact_guess_mae(std::span<const double> actuals);

struct Accuracy {
    double sa = 0.0;                    // fraction; tables render it x100
    std::optional<double> delta_signed;  // (MAE - MAE_p) / SP0; absent when SP0 = 0
    std::optional<double> delta() const;  // magnitude
};

/// Throws NumericError when the baseline MAE is not positive.
Accuracy standardized_accuracy(double mae, const GuessBaseline& baseline);

struct EvalReport {
    std::string model;
    ErrorMetrics errors;
    Accuracy accuracy;
    std::size_t n = 0;
};

EvalReport evaluate(std::string model, std::span<const double> actual, std::span<const double> predicted,
                    const GuessBaseline& baseline);

/// Column order MAE, MBRE, MIBRE, SA, Delta, ME.
std::vector<std::string> report_header();
std::vector<std::string> report_row(const EvalReport& r);
std::string render_reports_text(std::span<const EvalReport> reports);

}  // namespace rfuzzy::metrics
