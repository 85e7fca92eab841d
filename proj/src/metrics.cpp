#include "rfuzzy/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "rfuzzy/error.hpp"
#include "rfuzzy/rng.hpp"

namespace rfuzzy::metrics {

namespace {

void check_pairs(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size())
        throw DataError(fmt::format("{} actuals vs {} predictions", actual.size(), predicted.size()));
    if (actual.empty()) throw DataError("empty prediction set");
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!std::isfinite(actual[i]) || !std::isfinite(predicted[i]))
            throw DataError(fmt::format("non-finite value in pair {}", i));
        if (!(actual[i] > 0.0)) throw DataError(fmt::format("actual effort of pair {} is not positive", i));
    }
}

double sample_sd(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fmt_num(double v) { return fmt::format("{:.4f}", v); }

}  // namespace

ErrorMetrics compute_error_metrics(std::span<const double> actual, std::span<const double> predicted) {
    check_pairs(actual, predicted);
    ErrorMetrics m;
    const double n = static_cast<double>(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i], p = predicted[i];
        const double ae = std::fabs(e - p);
        const double lo = std::min(e, p), hi = std::max(e, p);
        if (lo == 0.0)
            throw NumericError(fmt::format("MBRE undefined: pair {} (actual {}, predicted {}) has a zero minimum", i, e, p));
        m.mae += ae;
        m.mbre += ae / lo;
        m.mibre += ae / hi;
        m.me += e - p;
    }
    m.mae /= n;
    m.mbre /= n;
    m.mibre /= n;
    m.me /= n;
    return m;
}

double exact_guess_mae(std::span<const double> a) {
    const std::size_t n = a.size();
    if (n < 2) throw DataError("guessing baseline needs at least two actuals");
    // Sum over ordered pairs via sorted prefix sums: O(n log n).
    std::vector<double> s(a.begin(), a.end());
    std::sort(s.begin(), s.end());
    double prefix = 0.0, total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        total += static_cast<double>(k) * s[k] - prefix;
        prefix += s[k];
    }
    return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

GuessBaseline random_guess_baseline(std::span<const double> actuals, int runs, std::uint64_t seed) {
    const std::size_t n = actuals.size();
    if (n < 2) throw DataError("guessing baseline needs at least two actuals");
    if (runs < 2) throw ConfigError("guessing baseline needs at least two runs");

    std::vector<double> run_mae(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r) {
        Rng rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r))));
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto j = static_cast<std::size_t>(rng.below(n - 1));
            if (j >= i) ++j;
            sum += std::fabs(actuals[i] - actuals[j]);
        }
        run_mae[static_cast<std::size_t>(r)] = sum / static_cast<double>(n);
    }

    GuessBaseline b;
    b.runs = runs;
    b.seed = seed;
    b.mae_p_bar = std::accumulate(run_mae.begin(), run_mae.end(), 0.0) / runs;
    b.sp0 = sample_sd(run_mae, b.mae_p_bar);
    // With two cases every run is forced to the same MAE.
    if (n == 2) {
        b.mae_p_bar = std::fabs(actuals[0] - actuals[1]);
        b.sp0 = 0.0;
    }
    b.exact_mean = exact_guess_mae(actuals);
    b.degenerate = std::all_of(actuals.begin(), actuals.end(), [&](double v) { return v == actuals[0]; });
    return b;
}

std::optional<double> Accuracy::delta() const {
    if (!delta_signed) return std::nullopt;
    return std::fabs(*delta_signed);
}

Accuracy standardized_accuracy(double mae, const GuessBaseline& baseline) {
    if (!(baseline.mae_p_bar > 0.0))
        throw NumericError("degenerate guessing baseline: mean random-guess MAE is zero");
    Accuracy a;
    a.sa = 1.0 - mae / baseline.mae_p_bar;
    if (baseline.sp0 > 0.0) a.delta_signed = (mae - baseline.mae_p_bar) / baseline.sp0;
    return a;
}

EvalReport evaluate(std::string model, std::span<const double> actual, std::span<const double> predicted,
                    const GuessBaseline& baseline) {
    EvalReport r;
    r.model = std::move(model);
    r.errors = compute_error_metrics(actual, predicted);
    r.accuracy = standardized_accuracy(r.errors.mae, baseline);
    r.n = actual.size();
    return r;
}

std::vector<std::string> report_header() {
    return {"model", "MAE", "MBRE", "MIBRE", "SA", "Delta", "ME", "delta_signed", "n"};
}

std::vector<std::string> report_row(const EvalReport& r) {
    const auto& d = r.accuracy.delta_signed;
    return {r.model,
            fmt_num(r.errors.mae),
            fmt_num(r.errors.mbre),
            fmt_num(r.errors.mibre),
            fmt::format("{:.2f}", 100.0 * r.accuracy.sa),
            d ? fmt_num(std::fabs(*d)) : "NA",
            fmt_num(r.errors.me),
            d ? fmt_num(*d) : "NA",
            fmt::format("{}", r.n)};
}

std::string render_reports_text(std::span<const EvalReport> reports) {
    std::vector<std::vector<std::string>> rows{report_header()};
    for (const auto& r : reports) rows.push_back(report_row(r));
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out += c == 0 ? fmt::format("{:<{}}", row[c], width[c]) : fmt::format("  {:>{}}", row[c], width[c]);
        out += "\n";
    }
    return out;
}

}  // namespace rfuzzy::metrics
