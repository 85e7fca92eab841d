#include "rfuzzy/stat_tests.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include "rfuzzy/error.hpp"

namespace rfuzzy::stats {

namespace {

constexpr double kTinyP = std::numeric_limits<double>::min();

double clamp_p(double p) { return std::clamp(p, kTinyP, 1.0); }

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double pop_variance(std::span<const double> x) {
    const double m = mean_of(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size());
}

// Rank-sum table over doubled ranks: counts[s] = number of sign assignments
// whose positive ranks sum to s / 2.
std::vector<double> signed_rank_counts(std::span<const double> ranks) {
    std::vector<long> doubled;
    long total = 0;
    for (double r : ranks) {
        const long d = std::lround(2.0 * r);
        if (std::fabs(2.0 * r - static_cast<double>(d)) > 1e-9)
            throw NumericError("signed-rank table requires ranks in steps of 1/2");
        doubled.push_back(d);
        total += d;
    }
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long d : doubled) {
        for (long s = reach; s >= 0; --s)
            if (counts[s] != 0.0) counts[s + d] += counts[s];
        reach += d;
    }
    return counts;
}

}  // namespace

double signed_rank_cdf(std::span<const double> ranks, double w) {
    const auto counts = signed_rank_counts(ranks);
    const double total = std::ldexp(1.0, static_cast<int>(ranks.size()));
    const long limit = std::lround(std::floor(2.0 * w + 1e-9));
    double acc = 0.0;
    for (long s = 0; s <= limit && s < static_cast<long>(counts.size()); ++s) acc += counts[s];
    return acc / total;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("signed-rank test needs paired samples of equal length");
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) scale = std::max({scale, std::fabs(a[i]), std::fabs(b[i])});
    // Differences below this are treated as exact zeros or exact ties so that
    // shifting both samples cannot change the outcome through rounding.
    const double eps = 1e-12 * scale;

    std::vector<double> d;
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = a[i] - b[i];
        if (std::fabs(v) <= eps)
            ++zeros;
        else
            d.push_back(v);
    }
    const std::size_t n = d.size();
    if (n < 5) throw DataError(fmt::format("insufficient nonzero differences ({} of {})", n, a.size()));

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return std::fabs(d[i]) < std::fabs(d[j]); });
    std::vector<double> rank(n);
    std::size_t tie_groups = 0;
    double tie_term = 0.0;  // sum of t^3 - t over tie groups
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && std::fabs(d[idx[j]]) - std::fabs(d[idx[j - 1]]) <= eps) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) rank[idx[k]] = avg;
        const double t = static_cast<double>(j - i);
        if (j - i > 1) {
            ++tie_groups;
            tie_term += t * t * t - t;
        }
        i = j;
    }
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0.0) w_plus += rank[i];

    TestResult r;
    r.method = "wilcoxon signed-rank";
    r.statistic = w_plus;
    r.n = n;
    const std::string common = fmt::format("zeros dropped: {}; tie groups: {}", zeros, tie_groups);

    if (n <= kWilcoxonExactMax) {
        const auto counts = signed_rank_counts(rank);
        const double total = std::ldexp(1.0, static_cast<int>(n));
        const long w2 = std::lround(2.0 * w_plus);
        double lower = 0.0, upper = 0.0;
        for (long s = 0; s < static_cast<long>(counts.size()); ++s) {
            if (s <= w2) lower += counts[s];
            if (s >= w2) upper += counts[s];
        }
        r.p_value = clamp_p(2.0 * std::min(lower, upper) / total);
        r.notes = "exact; " + common;
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double diff = w_plus - mean;
        const double corrected = std::fabs(diff) <= 0.5 ? 0.0 : std::fabs(diff) - 0.5;
        const double z = corrected / std::sqrt(var);
        r.p_value = clamp_p(std::erfc(z / std::numbers::sqrt2));
        r.notes = "normal approximation with continuity and tie correction; " + common;
    }
    return r;
}

// ---------------------------------------------------------------------------

TestResult anderson_darling_normality(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 8) throw DataError(fmt::format("Anderson-Darling test needs n >= 8, got {}", n));
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double nn = static_cast<double>(n);
    const double m = mean_of(s);
    double ss = 0.0;
    for (double v : s) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / (nn - 1.0));
    if (!(sd > 0.0)) throw DataError("Anderson-Darling test: zero variance");

    auto log_cdf = [](double z) { return std::log(std::max(0.5 * std::erfc(-z / std::numbers::sqrt2), 1e-300)); };
    auto log_sf = [](double z) { return std::log(std::max(0.5 * std::erfc(z / std::numbers::sqrt2), 1e-300)); };
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = (s[i] - m) / sd;
        const double zr = (s[n - 1 - i] - m) / sd;
        sum += (2.0 * static_cast<double>(i) + 1.0) * (log_cdf(zi) + log_sf(zr));
    }
    const double a2 = -nn - sum / nn;
    const double a = a2 * (1.0 + 0.75 / nn + 2.25 / (nn * nn));

    double p;
    if (a >= 0.6)
        p = std::exp(1.2937 - 5.709 * a + 0.0186 * a * a);
    else if (a >= 0.34)
        p = std::exp(0.9177 - 4.279 * a - 1.38 * a * a);
    else if (a >= 0.2)
        p = 1.0 - std::exp(-8.318 + 42.796 * a - 59.938 * a * a);
    else
        p = 1.0 - std::exp(-13.436 + 101.14 * a - 223.73 * a * a);

    TestResult r;
    r.method = "anderson-darling normality";
    r.statistic = a;
    r.p_value = clamp_p(p);
    r.n = n;
    r.notes = fmt::format("A^2 = {:.6g}; small-sample modified statistic reported", a2);
    return r;
}

// ---------------------------------------------------------------------------

double box_cox_transform(double x, double lambda) {
    if (std::fabs(lambda) < 1e-8) return std::log(x);
    return std::expm1(lambda * std::log(x)) / lambda;
}

double box_cox_log_likelihood(std::span<const double> x, double lambda) {
    std::vector<double> y(x.size());
    double log_sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = box_cox_transform(x[i], lambda);
        log_sum += std::log(x[i]);
    }
    const double var = pop_variance(y);
    if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
    return -0.5 * static_cast<double>(x.size()) * std::log(var) + (lambda - 1.0) * log_sum;
}

namespace {

std::pair<std::vector<double>, double> shifted_input(std::span<const double> x) {
    if (x.size() < 4) throw DataError(fmt::format("Box-Cox needs n >= 4, got {}", x.size()));
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) throw DataError("Box-Cox: constant data");
    const double shift = *lo <= 0.0 ? 1.0 - *lo : 0.0;
    std::vector<double> v(x.begin(), x.end());
    for (double& e : v) e += shift;
    return {std::move(v), shift};
}

}  // namespace

BoxCoxResult box_cox_fixed(std::span<const double> x, double lambda) {
    auto [v, shift] = shifted_input(x);
    BoxCoxResult r;
    r.lambda = lambda;
    r.shift = shift;
    r.log_likelihood = box_cox_log_likelihood(v, lambda);
    r.transformed.reserve(v.size());
    for (double e : v) r.transformed.push_back(box_cox_transform(e, lambda));
    return r;
}

BoxCoxResult box_cox(std::span<const double> x) {
    auto [v, shift] = shifted_input(x);
    const auto f = [&](double l) { return box_cox_log_likelihood(v, l); };
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = -5.0, hi = 5.0;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > 1e-5) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    return box_cox_fixed(x, 0.5 * (lo + hi));
}

// ---------------------------------------------------------------------------

ScottKnottGrouping scott_knott(std::span<const NamedSample> models, double alpha) {
    const std::size_t k = models.size();
    if (k < 2) throw DataError("Scott-Knott needs at least two models");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("Scott-Knott alpha must be in (0, 1)");

    std::vector<double> mean(k);
    double within_ss = 0.0, inv_n = 0.0;
    std::size_t total_n = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& v = models[i].second;
        if (v.size() < 2) throw DataError(fmt::format("Scott-Knott: model '{}' has fewer than 2 values", models[i].first));
        mean[i] = mean_of(v);
        for (double e : v) within_ss += (e - mean[i]) * (e - mean[i]);
        total_n += v.size();
        inv_n += 1.0 / static_cast<double>(v.size());
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return mean[i] < mean[j]; });

    ScottKnottGrouping out;
    out.error_dof = static_cast<double>(total_n - k);
    out.error_variance = out.error_dof > 0.0 ? within_ss / out.error_dof : 0.0;
    // Variance of a model mean: s^2 / r, with 1/r averaged for unequal sizes.
    const double mean_var = out.error_variance * inv_n / static_cast<double>(k);
    const double nu = out.error_dof;

    std::vector<double> sorted(k);
    for (std::size_t i = 0; i < k; ++i) {
        sorted[i] = mean[order[i]];
        out.order.push_back(models[order[i]].first);
    }
    out.means = sorted;
    out.group.assign(k, 0);

    const double coef = std::numbers::pi / (2.0 * (std::numbers::pi - 2.0));
    std::vector<std::pair<std::size_t, std::size_t>> leaves;

    std::function<void(std::size_t, std::size_t)> recurse = [&](std::size_t begin, std::size_t end) {
        const std::size_t m = end - begin;
        if (m < 2) {
            leaves.emplace_back(begin, end);
            return;
        }
        const double total = std::accumulate(sorted.begin() + begin, sorted.begin() + end, 0.0);
        const double grand = total / static_cast<double>(m);
        ScottKnottSplit sp;
        sp.begin = begin;
        sp.end = end;
        sp.b0 = -1.0;
        double left = 0.0;
        for (std::size_t cut = begin + 1; cut < end; ++cut) {
            left += sorted[cut - 1];
            const double k1 = static_cast<double>(cut - begin), k2 = static_cast<double>(end - cut);
            const double right = total - left;
            const double b = left * left / k1 + right * right / k2 - total * total / static_cast<double>(m);
            if (b > sp.b0) {
                sp.b0 = b;
                sp.cut = cut;
            }
        }
        sp.b0 = std::max(sp.b0, 0.0);
        double ss_means = 0.0;
        for (std::size_t i = begin; i < end; ++i) ss_means += (sorted[i] - grand) * (sorted[i] - grand);
        sp.sigma2 = (ss_means + nu * mean_var) / (static_cast<double>(m) + nu);
        sp.lambda = sp.sigma2 > 0.0 ? coef * sp.b0 / sp.sigma2 : 0.0;
        sp.nu0 = static_cast<double>(m) / (std::numbers::pi - 2.0);
        sp.critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(sp.nu0), alpha));
        sp.significant = sp.b0 > 0.0 && sp.lambda > sp.critical;
        out.splits.push_back(sp);
        if (!sp.significant) {
            leaves.emplace_back(begin, end);
            return;
        }
        recurse(begin, sp.cut);
        recurse(sp.cut, end);
    };
    recurse(0, k);

    std::sort(leaves.begin(), leaves.end());
    int g = 0;
    for (const auto& [b, e] : leaves) {
        ++g;
        for (std::size_t i = b; i < e; ++i) out.group[i] = g;
    }
    return out;
}

}  // namespace rfuzzy::stats
