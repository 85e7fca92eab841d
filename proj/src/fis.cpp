#include "rfuzzy/fis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "rfuzzy/error.hpp"

namespace rfuzzy::fis {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Rising edge from `lo` to `hi`; a vertical edge (lo == hi) belongs to the
// plateau, which the callers have already handled.
double rising(double lo, double hi, double x) { return (x - lo) / (hi - lo); }
double falling(double lo, double hi, double x) { return (hi - x) / (hi - lo); }

double tri_degree(const Triangular& t, double x) {
    if (x < t.a || x > t.c) return 0.0;
    if (x == t.b) return 1.0;
    if (x < t.b) return rising(t.a, t.b, x);
    return falling(t.b, t.c, x);
}

double trap_degree(const Trapezoidal& t, double x) {
    if (x < t.a || x > t.d) return 0.0;
    if (x >= t.b && x <= t.c) return 1.0;
    if (x < t.b) return rising(t.a, t.b, x);
    return falling(t.c, t.d, x);
}

std::string describe_point(const std::vector<FuzzyVariable>& inputs, std::span<const double> x) {
    std::string out = "(";
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i) out += ", ";
        const std::string name = i < inputs.size() ? inputs[i].name : fmt::format("x{}", i);
        out += fmt::format("{}={:.6g}", name, x[i]);
    }
    return out + ")";
}

}  // namespace

bool breakpoints_ordered(const MembershipFunction& mf) {
    const auto p = breakpoints(mf);
    for (double v : p)
        if (!std::isfinite(v)) return false;
    return std::is_sorted(p.begin(), p.end());
}

std::vector<double> breakpoints(const MembershipFunction& mf) {
    return std::visit(overloaded{
                          [](const Triangular& t) { return std::vector<double>{t.a, t.b, t.c}; },
                          [](const Trapezoidal& t) { return std::vector<double>{t.a, t.b, t.c, t.d}; },
                      },
                      mf);
}

MembershipFunction with_breakpoints(const MembershipFunction& mf, std::span<const double> p) {
    if (std::holds_alternative<Triangular>(mf)) {
        if (p.size() != 3) throw ValidationError("trimf takes 3 breakpoints");
        return Triangular{p[0], p[1], p[2]};
    }
    if (p.size() != 4) throw ValidationError("trapmf takes 4 breakpoints");
    return Trapezoidal{p[0], p[1], p[2], p[3]};
}

double membership_degree(const MembershipFunction& mf, double x) {
    if (!breakpoints_ordered(mf)) throw ValidationError("membership breakpoints are not ordered");
    return std::visit(overloaded{
                          [x](const Triangular& t) { return tri_degree(t, x); },
                          [x](const Trapezoidal& t) { return trap_degree(t, x); },
                      },
                      mf);
}

std::optional<std::size_t> FuzzyVariable::term_index(std::string_view label) const {
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (terms[i].label == label) return i;
    return std::nullopt;
}

std::map<std::string, double> fuzzify(const FuzzyVariable& var, double x) {
    std::map<std::string, double> out;
    for (const auto& t : var.terms) out[t.label] = membership_degree(t.mf, x);
    return out;
}

double Linear::evaluate(std::span<const double> x) const {
    double y = intercept;
    for (std::size_t j = 0; j < coefficients.size() && j < x.size(); ++j) y += coefficients[j] * x[j];
    return y;
}

InferenceConfig InferenceConfig::defaults_for(ModelKind kind) {
    InferenceConfig c;
    if (kind == ModelKind::Mamdani) {
        c.and_method = AndMethod::Min;
        c.defuzz = Defuzzifier::Centroid;
    } else {
        c.and_method = AndMethod::Product;
        c.defuzz = Defuzzifier::WeightedAverage;
    }
    return c;
}

std::vector<std::string> FisModel::input_names() const {
    std::vector<std::string> names;
    names.reserve(inputs.size());
    for (const auto& v : inputs) names.push_back(v.name);
    return names;
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Mamdani: return "mamdani";
        case ModelKind::Sugeno0: return "sugeno0";
        case ModelKind::Sugeno1: return "sugeno1";
    }
    return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
    if (s == "mamdani") return ModelKind::Mamdani;
    if (s == "sugeno0") return ModelKind::Sugeno0;
    if (s == "sugeno1") return ModelKind::Sugeno1;
    throw ValidationError(fmt::format("unknown model kind '{}'", s));
}

std::string_view to_string(AndMethod m) { return m == AndMethod::Min ? "min" : "product"; }

AndMethod and_method_from_string(std::string_view s) {
    if (s == "min") return AndMethod::Min;
    if (s == "product" || s == "prod") return AndMethod::Product;
    throw ValidationError(fmt::format("unknown AND method '{}'", s));
}

double firing_strength(const Rule& rule, std::span<const std::map<std::string, double>> degrees,
                       AndMethod and_method) {
    if (rule.antecedent.size() != degrees.size())
        throw ValidationError("rule antecedent length does not match input count");
    double w = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        if (!rule.antecedent[i]) continue;
        const auto it = degrees[i].find(*rule.antecedent[i]);
        if (it == degrees[i].end())
            throw ValidationError(fmt::format("unknown term label '{}'", *rule.antecedent[i]));
        w = !any ? it->second : (and_method == AndMethod::Min ? std::min(w, it->second) : w * it->second);
        any = true;
    }
    if (!any) throw ValidationError("rule has no antecedent clause");
    return rule.weight * w;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_variable(const FuzzyVariable& v, int resolution, bool check_coverage,
                    std::vector<Violation>& out) {
    if (!(std::isfinite(v.lo) && std::isfinite(v.hi) && v.lo < v.hi))
        out.push_back({"universe bounds", fmt::format("{}: need lo < hi, got [{}, {}]", v.name, v.lo, v.hi)});
    if (v.terms.empty()) {
        out.push_back({"no terms", v.name});
        return;
    }
    std::set<std::string> seen;
    bool ordered = true;
    for (const auto& t : v.terms) {
        if (!seen.insert(t.label).second)
            out.push_back({"duplicate label", fmt::format("{}.{}", v.name, t.label)});
        if (!breakpoints_ordered(t.mf)) {
            ordered = false;
            out.push_back({"breakpoint ordering", fmt::format("{}.{}", v.name, t.label)});
        }
    }
    if (!check_coverage || !ordered || !(v.lo < v.hi)) return;
    const int n = std::max(resolution, 2);
    for (int k = 0; k < n; ++k) {
        const double x = v.lo + (v.hi - v.lo) * k / (n - 1);
        double best = 0.0;
        for (const auto& t : v.terms) best = std::max(best, membership_degree(t.mf, x));
        if (best < 0.01) {
            out.push_back({"universe coverage", fmt::format("{}: max degree {:.4g} at x={:.6g}", v.name, best, x)});
            return;
        }
    }
}

}  // namespace

std::vector<Violation> validate_model(const FisModel& model) {
    std::vector<Violation> out;
    const auto& cfg = model.config;
    if (cfg.resolution < 101 || cfg.resolution % 2 == 0)
        out.push_back({"resolution", fmt::format("must be odd and >= 101, got {}", cfg.resolution)});
    const bool mamdani = model.kind == ModelKind::Mamdani;
    if (mamdani != (cfg.defuzz == Defuzzifier::Centroid))
        out.push_back({"kind/config", "Mamdani models defuzzify by centroid, Sugeno by weighted average"});

    const int grid = std::max(cfg.resolution, 101);
    if (model.inputs.empty()) out.push_back({"no inputs", ""});
    std::set<std::string> names;
    for (const auto& v : model.inputs) {
        if (!names.insert(v.name).second) out.push_back({"duplicate input", v.name});
        check_variable(v, grid, true, out);
    }
    if (mamdani) check_variable(model.output, grid, true, out);

    if (model.rules.empty()) out.push_back({"no rules", ""});
    for (std::size_t r = 0; r < model.rules.size(); ++r) {
        const Rule& rule = model.rules[r];
        if (!(rule.weight > 0.0 && rule.weight <= 1.0))
            out.push_back({"rule weight", fmt::format("rule {}: weight {} not in (0, 1]", r, rule.weight)});
        if (rule.antecedent.size() != model.inputs.size()) {
            out.push_back({"antecedent arity",
                           fmt::format("rule {}: {} clauses for {} inputs", r, rule.antecedent.size(),
                                       model.inputs.size())});
        } else {
            bool any = false;
            for (std::size_t i = 0; i < rule.antecedent.size(); ++i) {
                if (!rule.antecedent[i]) continue;
                any = true;
                if (!model.inputs[i].term_index(*rule.antecedent[i]))
                    out.push_back({"label reference", fmt::format("rule {}: {} has no term '{}'", r,
                                                                  model.inputs[i].name, *rule.antecedent[i])});
            }
            if (!any) out.push_back({"empty antecedent", fmt::format("rule {}", r)});
        }
        std::visit(overloaded{
                       [&](const MamdaniTerm& t) {
                           if (!mamdani)
                               out.push_back({"kind/consequent", fmt::format("rule {}: term consequent in {} model", r,
                                                                             to_string(model.kind))});
                           else if (!model.output.term_index(t.label))
                               out.push_back({"label reference",
                                              fmt::format("rule {}: output has no term '{}'", r, t.label)});
                       },
                       [&](const Constant& c) {
                           if (model.kind != ModelKind::Sugeno0)
                               out.push_back({"kind/consequent", fmt::format("rule {}: constant consequent in {} model",
                                                                             r, to_string(model.kind))});
                           if (!std::isfinite(c.value))
                               out.push_back({"consequent value", fmt::format("rule {}", r)});
                       },
                       [&](const Linear& l) {
                           if (model.kind != ModelKind::Sugeno1)
                               out.push_back({"kind/consequent", fmt::format("rule {}: linear consequent in {} model",
                                                                             r, to_string(model.kind))});
                           if (l.coefficients.size() != model.inputs.size())
                               out.push_back({"consequent arity",
                                              fmt::format("rule {}: {} coefficients for {} inputs", r,
                                                          l.coefficients.size(), model.inputs.size())});
                       },
                   },
                   rule.consequent);
    }
    return out;
}

void require_valid(const FisModel& model) {
    const auto violations = validate_model(model);
    if (violations.empty()) return;
    std::string msg = "invalid fuzzy model:";
    for (const auto& v : violations) msg += fmt::format("\n  {}: {}", v.code, v.detail);
    throw ValidationError(msg);
}

// ---------------------------------------------------------------------------
// Inference

InferenceEngine::InferenceEngine(FisModel model) : model_(std::move(model)) {
    require_valid(model_);
    rules_.reserve(model_.rules.size());
    for (const auto& rule : model_.rules) {
        CompiledRule c{{}, rule.weight, -1};
        for (std::size_t i = 0; i < rule.antecedent.size(); ++i)
            c.term.push_back(rule.antecedent[i] ? static_cast<int>(*model_.inputs[i].term_index(*rule.antecedent[i]))
                                                : -1);
        if (const auto* t = std::get_if<MamdaniTerm>(&rule.consequent))
            c.output_term = static_cast<int>(*model_.output.term_index(t->label));
        rules_.push_back(std::move(c));
    }
    if (model_.kind == ModelKind::Mamdani) {
        // Midpoint sampling: `resolution` cells of equal pitch over the universe.
        const int n = model_.config.resolution;
        const double lo = model_.output.lo;
        const double pitch = (model_.output.hi - lo) / n;
        samples_.resize(n);
        for (int k = 0; k < n; ++k) samples_[k] = lo + (k + 0.5) * pitch;
        for (const auto& term : model_.output.terms) {
            std::vector<double> mu(n);
            for (int k = 0; k < n; ++k) mu[k] = membership_degree(term.mf, samples_[k]);
            output_term_samples_.push_back(std::move(mu));
        }
    }
}

double InferenceEngine::firing(const CompiledRule& rule, const std::vector<std::vector<double>>& degrees) const {
    double w = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < rule.term.size(); ++i) {
        if (rule.term[i] < 0) continue;
        const double d = degrees[i][rule.term[i]];
        w = !any ? d : (model_.config.and_method == AndMethod::Min ? std::min(w, d) : w * d);
        any = true;
    }
    return rule.weight * w;
}

double InferenceEngine::defuzzify_centroid(std::span<const double> strength) const {
    // Clip each output term at its strength (min implication), aggregate by max.
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        double mu = 0.0;
        for (std::size_t t = 0; t < strength.size(); ++t)
            if (strength[t] > 0.0) mu = std::max(mu, std::min(strength[t], output_term_samples_[t][k]));
        num += samples_[k] * mu;
        den += mu;
    }
    if (!(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return num / den;
}

double InferenceEngine::infer(std::span<const double> x) const {
    if (x.size() != model_.inputs.size())
        throw ValidationError(fmt::format("expected {} inputs, got {}", model_.inputs.size(), x.size()));
    std::vector<std::vector<double>> degrees(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto& terms = model_.inputs[i].terms;
        degrees[i].resize(terms.size());
        for (std::size_t t = 0; t < terms.size(); ++t) degrees[i][t] = membership_degree(terms[t].mf, x[i]);
    }

    if (model_.kind == ModelKind::Mamdani) {
        // Rules sharing an output term combine by max before clipping.
        std::vector<double> strength(model_.output.terms.size(), 0.0);
        for (const auto& rule : rules_) {
            const double w = firing(rule, degrees);
            strength[rule.output_term] = std::max(strength[rule.output_term], w);
        }
        const double c = defuzzify_centroid(strength);
        if (std::isnan(c)) throw NoRuleFiredError("no rule fired at input " + describe_point(model_.inputs, x));
        return c;
    }

    double num = 0.0, den = 0.0;
    for (std::size_t r = 0; r < rules_.size(); ++r) {
        const double w = firing(rules_[r], degrees);
        if (w <= 0.0) continue;
        const auto& cons = model_.rules[r].consequent;
        const double y = model_.kind == ModelKind::Sugeno0 ? std::get<Constant>(cons).value
                                                           : std::get<Linear>(cons).evaluate(x);
        num += w * y;
        den += w;
    }
    if (!(den > 0.0)) throw NoRuleFiredError("no rule fired at input " + describe_point(model_.inputs, x));
    return num / den;
}

double infer(const FisModel& model, std::span<const double> inputs) {
    return InferenceEngine(model).infer(inputs);
}

}  // namespace rfuzzy::fis
