#pragma once

// Statistical comparison of models: Wilcoxon signed-rank on paired absolute
// residuals, Anderson-Darling normality, Box-Cox, and Scott-Knott clustering.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rfuzzy::stats {

struct TestResult {
    std::string method;
    double statistic = 0.0;
    double p_value = 1.0;  // in (0, 1]
    std::size_t n = 0;     // effective sample size
    std::string notes;
};

/// Largest n for which the signed-rank p-value is computed exactly.
inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Paired two-sided signed-rank test on a - b. Zero differences are dropped,
/// tied magnitudes get average ranks. The statistic is W+, the rank sum of
/// positive differences. Exact null distribution for n <= 25, otherwise a
/// normal approximation with tie-corrected variance and continuity correction.
/// Throws DataError with fewer than 5 nonzero differences.
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

/// Exact P(W+ <= w) for the given (possibly tied) ranks, by counting all
/// 2^n sign assignments through a rank-sum table. Ranks must be multiples of 1/2.
double signed_rank_cdf(std::span<const double> ranks, double w);

/// Case 3 (mean and variance estimated) with A*^2 = A^2 (1 + 0.75/n + 2.25/n^2)
/// and the D'Agostino-Stephens piecewise p-value. Requires n >= 8.
TestResult anderson_darling_normality(std::span<const double> x);

struct BoxCoxResult {
    double lambda = 1.0;
    double shift = 0.0;  // added before transforming when min(x) <= 0
    std::vector<double> transformed;
    double log_likelihood = 0.0;
};

double box_cox_transform(double x, double lambda);
double box_cox_log_likelihood(std::span<const double> x, double lambda);

/// Maximises the profile log-likelihood over lambda in [-5, 5] by golden
/// section search (tolerance 1e-5).
BoxCoxResult box_cox(std::span<const double> x);

/// Transform with a fixed lambda (shift rule as above).
BoxCoxResult box_cox_fixed(std::span<const double> x, double lambda);

struct ScottKnottSplit {
    std::size_t begin = 0, end = 0;  // range in sorted order, [begin, end)
    std::size_t cut = 0;             // first index of the upper part
    double b0 = 0.0;                 // between-group sum of squares of the means
    double sigma2 = 0.0;             // ML variance estimate of the means
    double lambda = 0.0;             // test statistic
    double nu0 = 0.0;                // chi-square degrees of freedom
    double critical = 0.0;
    bool significant = false;
};

struct ScottKnottGrouping {
    std::vector<std::string> order;  // ascending mean
    std::vector<double> means;       // aligned with order
    std::vector<int> group;          // 1-based, nondecreasing along order
    std::vector<ScottKnottSplit> splits;
    double error_variance = 0.0;  // pooled within-model variance
    double error_dof = 0.0;
    std::string estimator = "sigma0^2 = (SS_means + dof_err * s^2/r) / (k + dof_err), s^2 pooled within models";
};

using NamedSample = std::pair<std::string, std::vector<double>>;

/// Recursive binary partition of the sorted model means. Each split maximises
/// B0; it is kept when lambda = pi / (2 (pi - 2)) * B0 / sigma0^2 exceeds the
/// chi-square quantile at nu0 = k / (pi - 2) degrees of freedom.
ScottKnottGrouping scott_knott(std::span<const NamedSample> models, double alpha = 0.05);

}  // namespace rfuzzy::stats
