#pragma once

// Fuzzy inference: membership functions, rule bases, Mamdani and Sugeno
// (zero- and first-order) evaluation over crisp inputs.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rfuzzy::fis {

struct Triangular {
    double a, b, c;
};

struct Trapezoidal {
    double a, b, c, d;
};

using MembershipFunction = std::variant<Triangular, Trapezoidal>;

/// Degree of membership of `x`. Zero outside the support, one on the peak or
/// plateau, linear in between. Throws ValidationError on unordered breakpoints.
double membership_degree(const MembershipFunction& mf, double x);

bool breakpoints_ordered(const MembershipFunction& mf);
std::vector<double> breakpoints(const MembershipFunction& mf);
/// Rebuilds `mf` with new breakpoints; the count must match the shape.
MembershipFunction with_breakpoints(const MembershipFunction& mf, std::span<const double> points);

struct LinguisticTerm {
    std::string label;
    MembershipFunction mf;
};

struct FuzzyVariable {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<LinguisticTerm> terms;
    std::string units;

    std::optional<std::size_t> term_index(std::string_view label) const;
};

/// Degree per term label. Degrees need not sum to one.
std::map<std::string, double> fuzzify(const FuzzyVariable& var, double x);

struct MamdaniTerm {
    std::string label;
};

struct Constant {
    double value;
};

/// y = intercept + sum_j coefficients[j] * x_j, coefficients in input order.
struct Linear {
    std::vector<double> coefficients;
    double intercept = 0.0;

    double evaluate(std::span<const double> x) const;
};

using Consequent = std::variant<MamdaniTerm, Constant, Linear>;

struct Rule {
    /// One entry per model input; nullopt is "don't care".
    std::vector<std::optional<std::string>> antecedent;
    double weight = 1.0;
    Consequent consequent;
};

enum class ModelKind { Mamdani, Sugeno0, Sugeno1 };
enum class AndMethod { Min, Product };
enum class Implication { Min };
enum class Aggregation { Max };
enum class Defuzzifier { Centroid, WeightedAverage };

struct InferenceConfig {
    AndMethod and_method = AndMethod::Product;
    Implication implication = Implication::Min;
    Aggregation aggregation = Aggregation::Max;
    Defuzzifier defuzz = Defuzzifier::WeightedAverage;
    int resolution = 1001;

    /// Mamdani: min AND, centroid. Sugeno: product AND, weighted average.
    static InferenceConfig defaults_for(ModelKind kind);
};

struct FisModel {
    ModelKind kind = ModelKind::Sugeno1;
    std::vector<FuzzyVariable> inputs;
    /// Full variable for Mamdani; Sugeno models use only name and units.
    FuzzyVariable output;
    std::vector<Rule> rules;
    InferenceConfig config;
    std::map<std::string, std::string> metadata;

    std::vector<std::string> input_names() const;
};

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view s);
std::string_view to_string(AndMethod m);
AndMethod and_method_from_string(std::string_view s);

/// `degrees[i]` is the fuzzified map of input i. Throws ValidationError on an
/// unknown label.
double firing_strength(const Rule& rule, std::span<const std::map<std::string, double>> degrees,
                       AndMethod and_method);

struct Violation {
    std::string code;  // e.g. "consequent arity", "universe coverage"
    std::string detail;
};

/// Collects every structural problem; never throws.
std::vector<Violation> validate_model(const FisModel& model);

/// Throws ValidationError listing all violations, if any.
void require_valid(const FisModel& model);

/// Precompiled model for repeated evaluation. Construction validates.
class InferenceEngine {
public:
    explicit InferenceEngine(FisModel model);

    /// Crisp output for one input vector. Throws NoRuleFiredError naming the
    /// input point when every firing strength (or the aggregate mass) is zero.
    double infer(std::span<const double> inputs) const;

    const FisModel& model() const { return model_; }

private:
    struct CompiledRule {
        std::vector<int> term;  // -1 for don't care
        double weight;
        int output_term;  // Mamdani only
    };

    double firing(const CompiledRule& rule, const std::vector<std::vector<double>>& degrees) const;
    double defuzzify_centroid(std::span<const double> per_term_strength) const;

    FisModel model_;
    std::vector<CompiledRule> rules_;
    // Mamdani output sampling grid and per-term degrees at each sample.
    std::vector<double> samples_;
    std::vector<std::vector<double>> output_term_samples_;
};

double infer(const FisModel& model, std::span<const double> inputs);

}  // namespace rfuzzy::fis
