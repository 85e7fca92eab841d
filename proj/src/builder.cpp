#include "rfuzzy/builder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "rfuzzy/error.hpp"
#include "rfuzzy/rng.hpp"

namespace rfuzzy::builder {

using fis::FisModel;
using fis::FuzzyVariable;
using fis::ModelKind;

namespace {

// Outer universe bounds stop short of the mirrored shoulder feet so that the
// endpoints keep a nonzero degree (0.02) under the outer terms.
constexpr double kUniverseReach = 0.98;

bool is_binary(std::span<const double> values) {
    bool zero = false, one = false;
    for (double v : values) {
        if (v == 0.0)
            zero = true;
        else if (v == 1.0)
            one = true;
        else
            return false;
    }
    return zero && one;
}

FuzzyVariable binary_variable(std::string name) {
    FuzzyVariable v;
    v.name = std::move(name);
    v.lo = 0.0;
    v.hi = 1.0;
    v.terms = {{"zero", fis::Trapezoidal{0.0, 0.0, 0.3, 0.7}}, {"one", fis::Trapezoidal{0.3, 0.7, 1.0, 1.0}}};
    return v;
}

FuzzyVariable partition(std::span<const double> values, int count, std::string name, double reach = 1.0) {
    for (double v : values)
        if (!std::isfinite(v)) throw DataError(fmt::format("input '{}' has non-finite values", name));
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const std::size_t distinct = static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
    if (distinct <= 1) throw DataError(fmt::format("input '{}' is constant", name));
    if (is_binary(values)) return binary_variable(std::move(name));
    if (distinct < 3) throw DataError(fmt::format("input '{}' needs at least 3 distinct values, got {}", name, distinct));

    s.assign(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double lo = s.front(), hi = s.back();
    const auto k = static_cast<std::size_t>(count);
    std::vector<double> peak(k);
    for (std::size_t i = 0; i < k; ++i) peak[i] = data::quantile_linear(s, static_cast<double>(i) / (k - 1));
    if (k == 3 && (peak[1] == lo || peak[1] == hi))
        peak[1] = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    bool increasing = true;
    for (std::size_t i = 1; i < k; ++i) increasing = increasing && peak[i] > peak[i - 1];
    if (!increasing)
        for (std::size_t i = 0; i < k; ++i) peak[i] = lo + (hi - lo) * static_cast<double>(i) / (k - 1);

    const double left = peak[0] - reach * (peak[1] - peak[0]);
    const double right = peak[k - 1] + reach * (peak[k - 1] - peak[k - 2]);
    const auto labels = term_labels(count);
    FuzzyVariable v;
    v.name = std::move(name);
    v.lo = peak[0] - kUniverseReach * reach * (peak[1] - peak[0]);
    v.hi = peak[k - 1] + kUniverseReach * reach * (peak[k - 1] - peak[k - 2]);
    for (std::size_t i = 0; i < k; ++i) {
        const double a = i == 0 ? left : peak[i - 1];
        const double c = i + 1 == k ? right : peak[i + 1];
        v.terms.push_back({labels[i], fis::Triangular{a, peak[i], c}});
    }
    return v;
}

std::size_t argmax_term(const FuzzyVariable& v, double x) {
    std::size_t best = 0;
    double best_deg = -1.0;
    for (std::size_t t = 0; t < v.terms.size(); ++t) {
        const double d = fis::membership_degree(v.terms[t].mf, x);
        if (d > best_deg) {
            best_deg = d;
            best = t;
        }
    }
    return best;
}

std::size_t nearest(std::span<const double> targets, double value) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < targets.size(); ++i)
        if (std::fabs(targets[i] - value) < std::fabs(targets[best] - value)) best = i;
    return best;
}

fis::Linear fit_section(const TrainingSet& train, const OutputSection& sec, const std::string& label) {
    const std::size_t p = train.input_names.size();
    if (sec.members.size() < p + 2)
        throw DataError(fmt::format("output section '{}' has {} project(s); a first-order consequent over {} input(s) "
                                    "needs at least {}",
                                    label, sec.members.size(), p, p + 2));
    const TrainingSet part = train.subset(sec.members);
    // Inputs constant inside the section carry no information there and get
    // a zero coefficient.
    std::vector<std::size_t> varying;
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = part.column(j);
        if (std::any_of(col.begin(), col.end(), [&](double v) { return v != col.front(); })) varying.push_back(j);
    }
    fis::Linear lin;
    lin.coefficients.assign(p, 0.0);
    if (varying.empty()) {
        lin.intercept = std::accumulate(part.y.begin(), part.y.end(), 0.0) / static_cast<double>(part.size());
        return lin;
    }
    regression::OlsFit fit;
    try {
        fit = regression::fit_ols(part.design().select(varying), part.y);
    } catch (const NumericError& e) {
        throw NumericError(fmt::format("output section '{}': {}", label, e.what()));
    }
    lin.intercept = fit.coefficients[0];
    for (std::size_t k = 0; k < varying.size(); ++k) lin.coefficients[varying[k]] = fit.coefficients[k + 1];
    return lin;
}

std::string join(std::span<const std::string> v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
    return out;
}

}  // namespace

void BuilderConfig::check() const {
    if (terms_per_input < 2) throw ConfigError("terms_per_input must be >= 2");
    if (output_sections < 2) throw ConfigError("output_sections must be >= 2");
    if (!(section_overlap >= 0.0 && section_overlap < 0.5)) throw ConfigError("section_overlap must be in [0, 0.5)");
    if (tuning_max_iterations < 0) throw ConfigError("tuning_max_iterations must be >= 0");
    if (!(tuning_step > 0.0)) throw ConfigError("tuning_step must be positive");
    if (!(outer_reach >= 1.0)) throw ConfigError("outer_reach must be >= 1");
}

double feature_value(const data::ProjectRecord& r, std::string_view name) {
    if (name == "AFP") return r.afp;
    if (name == "TeamSize") return r.team_size;
    constexpr std::string_view prefix = "ResourceLevel";
    if (name.starts_with(prefix)) {
        int level = 0;
        const auto rest = name.substr(prefix.size());
        const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), level);
        if (ec == std::errc{} && ptr == rest.data() + rest.size()) return r.resource_level == level ? 1.0 : 0.0;
    }
    throw DataError(fmt::format("unknown model input '{}'", name));
}

std::vector<double> TrainingSet::column(std::size_t j) const {
    std::vector<double> c;
    c.reserve(x.size());
    for (const auto& row : x) c.push_back(row[j]);
    return c;
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> rows) const {
    TrainingSet t;
    t.input_names = input_names;
    for (std::size_t r : rows) {
        t.ids.push_back(ids[r]);
        t.x.push_back(x[r]);
        t.y.push_back(y[r]);
    }
    return t;
}

regression::DesignMatrix TrainingSet::design() const {
    std::vector<std::vector<double>> cols;
    for (std::size_t j = 0; j < input_names.size(); ++j) cols.push_back(column(j));
    auto m = regression::DesignMatrix::from_columns(input_names, cols);
    if (input_names.empty()) m.values.resize(static_cast<Eigen::Index>(size()), 0);
    return m;
}

TrainingSet make_training_set(const data::ProjectSet& ps, std::span<const std::string> inputs) {
    TrainingSet t;
    t.input_names.assign(inputs.begin(), inputs.end());
    for (const auto& r : ps.records) {
        std::vector<double> row;
        for (const auto& name : inputs) row.push_back(feature_value(r, name));
        t.ids.push_back(r.id);
        t.x.push_back(std::move(row));
        t.y.push_back(r.effort);
    }
    return t;
}

std::vector<std::string> term_labels(int count) {
    if (count == 2) return {"Small", "Large"};
    if (count == 3) return {"Small", "Average", "Large"};
    std::vector<std::string> out;
    for (int i = 1; i <= count; ++i) out.push_back(fmt::format("T{}", i));
    return out;
}

FuzzyVariable input_partition(std::span<const double> values, const BuilderConfig& config, std::string name) {
    config.check();
    return partition(values, config.terms_per_input, std::move(name), config.outer_reach);
}

std::vector<OutputSection> output_sections(const TrainingSet& train, const BuilderConfig& config) {
    config.check();
    if (train.size() == 0) throw DataError("empty training set");
    std::vector<double> s = train.y;
    std::sort(s.begin(), s.end());
    const double lo = s.front(), hi = s.back();
    const int k = config.output_sections;
    const double o = config.section_overlap;
    const double w = 1.0 / (k - (k - 1) * o);  // section width as a fraction of the span
    std::vector<OutputSection> out;
    for (int i = 0; i < k; ++i) {
        OutputSection sec;
        sec.index = i;
        const double f0 = i * w * (1.0 - o);
        const double f1 = i + 1 == k ? 1.0 : f0 + w;
        if (config.section_mode == SectionMode::EqualWidth) {
            sec.lo = i == 0 ? lo : lo + f0 * (hi - lo);
            sec.hi = i + 1 == k ? hi : lo + f1 * (hi - lo);
        } else {
            sec.lo = data::quantile_linear(s, f0);
            sec.hi = data::quantile_linear(s, f1);
        }
        double sum = 0.0;
        for (std::size_t r = 0; r < train.size(); ++r) {
            if (train.y[r] >= sec.lo && train.y[r] <= sec.hi) {
                sec.members.push_back(r);
                sec.member_ids.push_back(train.ids[r]);
                sum += train.y[r];
            }
        }
        sec.mean_effort = sec.members.empty() ? 0.5 * (sec.lo + sec.hi) : sum / static_cast<double>(sec.members.size());
        out.push_back(std::move(sec));
    }
    return out;
}

FisModel assemble(ModelKind kind, std::vector<FuzzyVariable> inputs, const TrainingSet& train,
                  const BuilderConfig& config) {
    config.check();
    if (train.size() == 0) throw DataError("empty training set");
    if (inputs.size() != train.input_names.size()) throw DataError("input partitions do not match training inputs");
    for (std::size_t j = 0; j < inputs.size(); ++j)
        if (inputs[j].name != train.input_names[j])
            throw DataError(fmt::format("input {} is '{}' but the training set has '{}'", j, inputs[j].name,
                                        train.input_names[j]));

    FisModel m;
    m.kind = kind;
    m.config = fis::InferenceConfig::defaults_for(kind);
    m.output.name = "Effort";
    m.output.units = "person-hours";

    std::vector<double> targets;
    std::vector<OutputSection> sections;
    std::vector<fis::Linear> linear;
    const auto labels = term_labels(config.output_sections);
    if (kind == ModelKind::Mamdani) {
        m.output = partition(train.y, config.output_sections, "Effort");
        m.output.units = "person-hours";
        for (const auto& t : m.output.terms) targets.push_back(fis::breakpoints(t.mf)[1]);
    } else {
        sections = output_sections(train, config);
        for (const auto& s : sections) targets.push_back(s.mean_effort);
        if (kind == ModelKind::Sugeno1)
            for (std::size_t i = 0; i < sections.size(); ++i) linear.push_back(fit_section(train, sections[i], labels[i]));
    }

    std::map<std::vector<std::size_t>, std::pair<double, std::size_t>> cells;
    for (std::size_t r = 0; r < train.size(); ++r) {
        std::vector<std::size_t> key;
        for (std::size_t j = 0; j < inputs.size(); ++j) key.push_back(argmax_term(inputs[j], train.x[r][j]));
        auto& c = cells[key];
        c.first += train.y[r];
        ++c.second;
    }

    std::vector<std::size_t> continuous;
    for (std::size_t j = 0; j < inputs.size(); ++j)
        if (!is_binary(train.column(j))) continuous.push_back(j);
    if (continuous.empty())
        for (std::size_t j = 0; j < inputs.size(); ++j) continuous.push_back(j);

    const std::size_t n_out = targets.size();
    std::vector<std::size_t> key(inputs.size(), 0);
    std::size_t empty_cells = 0;
    while (true) {
        std::size_t out;
        if (auto it = cells.find(key); it != cells.end()) {
            out = nearest(targets, it->second.first / static_cast<double>(it->second.second));
        } else {
            ++empty_cells;
            double rank = 0.0;
            for (std::size_t j : continuous)
                rank += static_cast<double>(key[j]) / static_cast<double>(inputs[j].terms.size() - 1);
            rank /= static_cast<double>(continuous.size());
            out = static_cast<std::size_t>(std::floor(rank * static_cast<double>(n_out - 1) + 0.5));
        }
        fis::Rule rule;
        for (std::size_t j = 0; j < inputs.size(); ++j) rule.antecedent.emplace_back(inputs[j].terms[key[j]].label);
        if (kind == ModelKind::Mamdani)
            rule.consequent = fis::MamdaniTerm{m.output.terms[out].label};
        else if (kind == ModelKind::Sugeno0)
            rule.consequent = fis::Constant{sections[out].mean_effort};
        else
            rule.consequent = linear[out];
        m.rules.push_back(std::move(rule));

        std::size_t j = inputs.size();
        while (j > 0 && ++key[j - 1] == inputs[j - 1].terms.size()) key[--j] = 0;
        if (j == 0) break;
    }

    m.inputs = std::move(inputs);
    m.metadata["builder"] = "grid rules from training cells";
    m.metadata["average"] = "median";
    m.metadata["inputs"] = join(m.input_names());
    m.metadata["training_projects"] = std::to_string(train.size());
    m.metadata["empty_cells"] = std::to_string(empty_cells);
    if (kind != ModelKind::Mamdani) {
        m.metadata["section_mode"] = config.section_mode == SectionMode::EqualWidth ? "equal_width" : "equal_count";
        m.metadata["section_overlap"] = fmt::format("{}", config.section_overlap);
        std::string sizes;
        for (const auto& s : sections) sizes += (sizes.empty() ? "" : ",") + std::to_string(s.members.size());
        m.metadata["section_sizes"] = sizes;
    }
    fis::require_valid(m);
    return m;
}

FisModel build(ModelKind kind, const TrainingSet& train, const BuilderConfig& config) {
    config.check();
    if (train.size() == 0) throw DataError("empty training set");
    if (train.input_names.empty()) throw DataError("no model inputs selected");
    std::vector<FuzzyVariable> inputs;
    for (std::size_t j = 0; j < train.input_names.size(); ++j)
        inputs.push_back(partition(train.column(j), config.terms_per_input, train.input_names[j], config.outer_reach));
    auto model = assemble(kind, std::move(inputs), train, config);
    if (config.tuning) model = tune(model, train, config);
    return model;
}

FisModel build_mamdani(const TrainingSet& train, const BuilderConfig& config) {
    return build(ModelKind::Mamdani, train, config);
}
FisModel build_sugeno_constant(const TrainingSet& train, const BuilderConfig& config) {
    return build(ModelKind::Sugeno0, train, config);
}
FisModel build_sugeno_linear(const TrainingSet& train, const BuilderConfig& config) {
    return build(ModelKind::Sugeno1, train, config);
}

FisModel bridge_model(std::span<const std::string> input_names, std::span<const double> lo, std::span<const double> hi,
                      double intercept, std::span<const double> coefficients) {
    const std::size_t p = input_names.size();
    if (lo.size() != p || hi.size() != p || coefficients.size() != p)
        throw DataError("bridge model: names, ranges and coefficients differ in length");
    if (p == 0) throw DataError("bridge model needs at least one input");
    FisModel m;
    m.kind = ModelKind::Sugeno1;
    m.config = fis::InferenceConfig::defaults_for(m.kind);
    m.output.name = "Effort";
    m.output.units = "person-hours";
    fis::Rule rule;
    for (std::size_t j = 0; j < p; ++j) {
        FuzzyVariable v;
        v.name = input_names[j];
        v.lo = lo[j];
        v.hi = hi[j] > lo[j] ? hi[j] : lo[j] + 1.0;
        const double s = std::max(v.hi - v.lo, 1.0);
        v.terms = {{"all", fis::Trapezoidal{v.lo - 2 * s, v.lo - s, v.hi + s, v.hi + 2 * s}}};
        m.inputs.push_back(std::move(v));
        rule.antecedent.emplace_back("all");
    }
    rule.consequent = fis::Linear{{coefficients.begin(), coefficients.end()}, intercept};
    m.rules.push_back(std::move(rule));
    m.metadata["builder"] = "single universal rule carrying the regression";
    fis::require_valid(m);
    return m;
}

FisModel bridge_model(const TrainingSet& train, const regression::OlsFit& fit) {
    std::vector<double> lo, hi, coef;
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto it = std::find(train.input_names.begin(), train.input_names.end(), fit.names[j]);
        if (it == train.input_names.end()) throw DataError(fmt::format("bridge model: unknown input '{}'", fit.names[j]));
        const auto col = train.column(static_cast<std::size_t>(it - train.input_names.begin()));
        const auto [a, b] = std::minmax_element(col.begin(), col.end());
        lo.push_back(*a);
        hi.push_back(*b);
        coef.push_back(fit.coefficients[static_cast<Eigen::Index>(j) + 1]);
    }
    return bridge_model(fit.names, lo, hi, fit.intercept(), coef);
}

double cross_validated_mae(const FisModel& model, const TrainingSet& train, const BuilderConfig& config) {
    const auto k = static_cast<std::size_t>(config.tuning_folds);
    if (config.tuning_folds < 2) throw ConfigError("tuning needs at least 2 folds");
    if (train.size() < k) throw DataError(fmt::format("{} folds need at least {} projects", k, k));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(config.seed);
    rng.shuffle(order.begin(), order.end());

    double total = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> fit_rows, held_rows;
        for (std::size_t i = 0; i < order.size(); ++i) (i % k == f ? held_rows : fit_rows).push_back(order[i]);
        std::sort(fit_rows.begin(), fit_rows.end());
        std::sort(held_rows.begin(), held_rows.end());
        try {
            const fis::InferenceEngine engine(assemble(model.kind, model.inputs, train.subset(fit_rows), config));
            double err = 0.0;
            for (std::size_t r : held_rows) err += std::fabs(train.y[r] - engine.infer(train.x[r]));
            total += err / static_cast<double>(held_rows.size());
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return total / static_cast<double>(k);
}

FisModel tune(const FisModel& model, const TrainingSet& train, const BuilderConfig& config, TuneReport* report) {
    config.check();
    if (config.tuning_folds < 2) throw ConfigError("tuning needs at least 2 folds");
    std::vector<FuzzyVariable> inputs = model.inputs;
    FisModel candidate = model;
    double best = cross_validated_mae(model, train, config);
    TuneReport rep;
    rep.score_before = best;

    struct Param {
        std::size_t var, term, point;
    };
    std::vector<Param> params;
    for (std::size_t v = 0; v < inputs.size(); ++v) {
        if (v < train.input_names.size() && is_binary(train.column(v))) continue;
        const auto& terms = inputs[v].terms;
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const std::size_t np = fis::breakpoints(terms[t].mf).size();
            for (std::size_t p = 0; p < np; ++p) {
                if ((t == 0 && p == 0) || (t + 1 == terms.size() && p + 1 == np)) continue;
                params.push_back({v, t, p});
            }
        }
    }

    for (int iter = 0; iter < config.tuning_max_iterations; ++iter) {
        ++rep.iterations;
        bool improved = false;
        for (const auto& prm : params) {
            for (double dir : {1.0, -1.0}) {
                auto& var = inputs[prm.var];
                auto pts = fis::breakpoints(var.terms[prm.term].mf);
                pts[prm.point] += dir * config.tuning_step * (var.hi - var.lo);
                const auto moved = fis::with_breakpoints(var.terms[prm.term].mf, pts);
                if (!fis::breakpoints_ordered(moved)) continue;
                candidate.inputs = inputs;
                candidate.inputs[prm.var].terms[prm.term].mf = moved;
                const double score = cross_validated_mae(candidate, train, config);
                if (score < best) {
                    best = score;
                    var.terms[prm.term].mf = moved;
                    ++rep.accepted_moves;
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) break;
    }
    rep.score_after = best;
    if (report) *report = rep;
    if (rep.accepted_moves == 0) return model;
    auto tuned = assemble(model.kind, std::move(inputs), train, config);
    tuned.metadata["tuning"] = fmt::format("{} move(s) over {} pass(es), held-out MAE {:.6g} -> {:.6g}",
                                           rep.accepted_moves, rep.iterations, rep.score_before, rep.score_after);
    return tuned;
}

io::ModelBundle load_fixture(const std::filesystem::path& path) {
    auto bundle = io::load_bundle(path);
    for (const auto& [name, m] : bundle.models) {
        try {
            fis::require_valid(m);
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("{} model '{}': {}", path.string(), name, e.what()));
        }
    }
    return bundle;
}

}  // namespace rfuzzy::builder
