#include "rfuzzy/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "rfuzzy/error.hpp"

namespace rfuzzy::regression {

namespace {

constexpr double kRankTolerance = 1e-10;

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return a;
}

Eigen::Index numeric_rank(const Eigen::MatrixXd& a) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(kRankTolerance);
    return qr.rank();
}

// Unit-norm columns; zero columns are left as is and caught by the rank check.
Eigen::VectorXd column_norms(const Eigen::MatrixXd& a) {
    Eigen::VectorXd n = a.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < n.size(); ++j)
        if (n[j] == 0.0) n[j] = 1.0;
    return n;
}

}  // namespace

DesignMatrix DesignMatrix::select(std::span<const std::size_t> columns) const {
    DesignMatrix out;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        out.names.push_back(names.at(columns[k]));
        out.values.col(static_cast<Eigen::Index>(k)) = values.col(static_cast<Eigen::Index>(columns[k]));
    }
    return out;
}

DesignMatrix DesignMatrix::from_columns(std::vector<std::string> names, const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size()) throw DataError("column names and columns differ in count");
    DesignMatrix m;
    m.names = std::move(names);
    const Eigen::Index rows = columns.empty() ? 0 : static_cast<Eigen::Index>(columns.front().size());
    m.values.resize(rows, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (static_cast<Eigen::Index>(columns[j].size()) != rows) throw DataError("design matrix is not rectangular");
        for (Eigen::Index i = 0; i < rows; ++i) m.values(i, static_cast<Eigen::Index>(j)) = columns[j][i];
    }
    return m;
}

double OlsFit::predict(std::span<const double> x) const { return predict_ols(*this, x); }

double student_t_two_sided_p(double t, double dof) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t dist(dof);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

OlsFit fit_ols(const DesignMatrix& x, std::span<const double> y) {
    const Eigen::Index n = x.values.rows();
    const Eigen::Index p = x.values.cols();
    if (static_cast<Eigen::Index>(y.size()) != n)
        throw DataError(fmt::format("design has {} rows but {} responses", n, y.size()));
    if (static_cast<Eigen::Index>(x.names.size()) != p) throw DataError("design column names do not match columns");
    if (n <= p + 1) throw DataError(fmt::format("need more than {} rows for {} columns, got {}", p + 1, p, n));
    if (!x.values.allFinite()) throw DataError("design matrix has non-finite entries");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("response has non-finite entries");

    const Eigen::MatrixXd a = with_intercept(x.values);
    const Eigen::VectorXd norms = column_norms(a);
    const Eigen::MatrixXd scaled = a * norms.cwiseInverse().asDiagonal();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < p + 1) {
        // Greedy pass in declaration order names the columns that add no rank.
        std::vector<std::string> dependent;
        std::vector<Eigen::Index> kept;
        for (Eigen::Index j = 0; j <= p; ++j) {
            kept.push_back(j);
            Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(kept.size()));
            for (std::size_t k = 0; k < kept.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = scaled.col(kept[k]);
            if (numeric_rank(sub) < static_cast<Eigen::Index>(kept.size())) {
                kept.pop_back();
                dependent.push_back(j == 0 ? "(intercept)" : x.names[static_cast<std::size_t>(j - 1)]);
            }
        }
        std::string list;
        for (const auto& d : dependent) list += (list.empty() ? "" : ", ") + d;
        throw NumericError("rank-deficient design: dependent column(s) " + list);
    }

    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    const Eigen::VectorXd beta_scaled = qr.solve(yv);

    OlsFit fit;
    fit.names = x.names;
    fit.coefficients = beta_scaled.cwiseQuotient(norms);
    fit.residuals = yv - a * fit.coefficients;
    fit.rss = fit.residuals.squaredNorm();
    fit.dof = static_cast<int>(n - p - 1);
    const double tss = (yv.array() - yv.mean()).matrix().squaredNorm();
    fit.r_squared = tss > 0.0 ? 1.0 - fit.rss / tss : 1.0;

    // cov(beta_scaled) = sigma^2 P (R^T R)^-1 P^T
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p + 1, p + 1).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p + 1, p + 1));
    const Eigen::MatrixXd unscaled_cov = qr.colsPermutation() * (r_inv * r_inv.transpose()) *
                                         qr.colsPermutation().transpose();
    const double sigma2 = fit.rss / fit.dof;

    fit.std_errors.resize(p + 1);
    fit.t_stats.resize(p + 1);
    fit.p_values.resize(p + 1);
    for (Eigen::Index j = 0; j <= p; ++j) {
        const double se = std::sqrt(sigma2 * unscaled_cov(j, j)) / norms[j];
        const double b = fit.coefficients[j];
        double t;
        if (se > 0.0)
            t = b / se;
        else
            t = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
        fit.std_errors[j] = se;
        fit.t_stats[j] = t;
        fit.p_values[j] = student_t_two_sided_p(t, fit.dof);
    }
    return fit;
}

double predict_ols(const OlsFit& fit, std::span<const double> x) {
    const auto p = static_cast<std::size_t>(fit.coefficients.size()) - 1;
    if (x.size() != p) throw DataError(fmt::format("model expects {} features, got {}", p, x.size()));
    double y = fit.coefficients[0];
    for (std::size_t j = 0; j < p; ++j) y += fit.coefficients[static_cast<Eigen::Index>(j + 1)] * x[j];
    return y;
}

// ---------------------------------------------------------------------------

namespace {

// nullopt when the subset cannot be fitted (rank deficient or too few rows).
std::optional<OlsFit> try_fit(const DesignMatrix& candidates, std::span<const double> y,
                              const std::vector<std::size_t>& selected) {
    try {
        return fit_ols(candidates.select(selected), y);
    } catch (const NumericError&) {
        return std::nullopt;
    } catch (const DataError&) {
        return std::nullopt;
    }
}

}  // namespace

StepwiseResult stepwise_select(const DesignMatrix& candidates, std::span<const double> y, StepwiseConfig config) {
    if (config.p_enter > config.p_remove) throw ConfigError("stepwise requires p_enter <= p_remove");
    if (candidates.cols() == 0) throw DataError("stepwise selection needs at least one candidate");

    StepwiseResult result;
    std::vector<std::size_t> selected;
    std::set<std::vector<std::size_t>> visited{selected};

    for (;;) {
        bool changed = false;

        // Forward: the best-scoring candidate enters if it clears p_enter.
        std::size_t best = candidates.cols();
        double best_p = 2.0;
        for (std::size_t c = 0; c < candidates.cols(); ++c) {
            if (std::find(selected.begin(), selected.end(), c) != selected.end()) continue;
            auto trial = selected;
            trial.push_back(c);
            std::sort(trial.begin(), trial.end());
            const auto fit = try_fit(candidates, y, trial);
            if (!fit) continue;
            const auto pos = std::find(trial.begin(), trial.end(), c) - trial.begin();
            const double pv = fit->p_values[pos + 1];
            if (pv < best_p) {
                best_p = pv;
                best = c;
            }
        }
        if (best < candidates.cols() && best_p < config.p_enter) {
            auto next = selected;
            next.push_back(best);
            std::sort(next.begin(), next.end());
            if (visited.insert(next).second) {
                selected = std::move(next);
                result.trace.push_back({"enter", candidates.names[best], best_p});
                changed = true;
            }
        }

        // Backward: the weakest selected column leaves if it exceeds p_remove.
        if (!selected.empty()) {
            if (const auto fit = try_fit(candidates, y, selected)) {
                std::size_t worst = selected.size();
                double worst_p = -1.0;
                for (std::size_t k = 0; k < selected.size(); ++k) {
                    const double pv = fit->p_values[static_cast<Eigen::Index>(k + 1)];
                    if (pv > worst_p) {
                        worst_p = pv;
                        worst = k;
                    }
                }
                if (worst_p > config.p_remove) {
                    auto next = selected;
                    const std::size_t column = next[worst];
                    next.erase(next.begin() + static_cast<std::ptrdiff_t>(worst));
                    if (visited.insert(next).second) {
                        selected = std::move(next);
                        result.trace.push_back({"remove", candidates.names[column], worst_p});
                        changed = true;
                    }
                }
            }
        }
        if (!changed) break;
    }

    result.selected = selected;
    for (auto c : selected) result.selected_names.push_back(candidates.names[c]);
    auto fit = try_fit(candidates, y, selected);
    if (!fit) throw NumericError("stepwise selection: final model could not be fitted");
    result.fit = std::move(*fit);
    return result;
}

DummyColumns encode_dummies(std::span<const int> values, int baseline, std::string_view prefix) {
    std::set<int> levels(values.begin(), values.end());
    if (levels.size() < 2) throw DataError("dummy encoding needs at least two distinct categories");
    if (!levels.count(baseline)) throw DataError(fmt::format("baseline category {} does not occur", baseline));
    DummyColumns out;
    for (int level : levels) {
        if (level == baseline) continue;
        out.levels.push_back(level);
        out.names.push_back(fmt::format("{}{}", prefix, level));
        std::vector<double> col(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) col[i] = values[i] == level ? 1.0 : 0.0;
        out.columns.push_back(std::move(col));
    }
    return out;
}

}  // namespace rfuzzy::regression
