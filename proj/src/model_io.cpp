#include "rfuzzy/model_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rfuzzy/error.hpp"

namespace rfuzzy::io {

using json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

json mf_json(const fis::LinguisticTerm& t) {
    json j;
    j["label"] = t.label;
    j["type"] = std::holds_alternative<fis::Triangular>(t.mf) ? "trimf" : "trapmf";
    j["params"] = fis::breakpoints(t.mf);
    return j;
}

json variable_json(const fis::FuzzyVariable& v, bool with_terms) {
    json j;
    j["name"] = v.name;
    if (!v.units.empty()) j["units"] = v.units;
    if (with_terms) {
        j["range"] = {v.lo, v.hi};
        json terms = json::array();
        for (const auto& t : v.terms) terms.push_back(mf_json(t));
        j["terms"] = std::move(terms);
    }
    return j;
}

[[noreturn]] void bad(std::string_view source, const std::string& what) {
    throw ValidationError(fmt::format("{}: {}", source, what));
}

const json& need(const json& j, const char* key, std::string_view source) {
    if (!j.is_object() || !j.contains(key)) bad(source, fmt::format("missing field '{}'", key));
    return j.at(key);
}

double num(const json& j, std::string_view source, std::string_view what) {
    if (!j.is_number()) bad(source, fmt::format("{} must be a number", what));
    return j.get<double>();
}

std::vector<double> nums(const json& j, std::string_view source, std::string_view what) {
    if (!j.is_array()) bad(source, fmt::format("{} must be an array of numbers", what));
    std::vector<double> out;
    for (const auto& e : j) out.push_back(num(e, source, what));
    return out;
}

std::string str(const json& j, std::string_view source, std::string_view what) {
    if (!j.is_string()) bad(source, fmt::format("{} must be a string", what));
    return j.get<std::string>();
}

fis::FuzzyVariable variable_from(const json& j, bool with_terms, std::string_view source) {
    fis::FuzzyVariable v;
    v.name = str(need(j, "name", source), source, "variable name");
    if (j.contains("units")) v.units = str(j.at("units"), source, "units");
    if (!with_terms) return v;
    const auto range = nums(need(j, "range", source), source, "range");
    if (range.size() != 2) bad(source, fmt::format("variable '{}': range needs two numbers", v.name));
    v.lo = range[0];
    v.hi = range[1];
    const auto& terms = need(j, "terms", source);
    if (!terms.is_array()) bad(source, fmt::format("variable '{}': terms must be an array", v.name));
    for (const auto& t : terms) {
        fis::LinguisticTerm term;
        term.label = str(need(t, "label", source), source, "term label");
        const auto type = str(need(t, "type", source), source, "term type");
        const auto p = nums(need(t, "params", source), source, "term params");
        if (type == "trimf") {
            if (p.size() != 3) bad(source, fmt::format("term '{}': trimf needs 3 params", term.label));
            term.mf = fis::Triangular{p[0], p[1], p[2]};
        } else if (type == "trapmf") {
            if (p.size() != 4) bad(source, fmt::format("term '{}': trapmf needs 4 params", term.label));
            term.mf = fis::Trapezoidal{p[0], p[1], p[2], p[3]};
        } else {
            bad(source, fmt::format("term '{}': unknown type '{}'", term.label, type));
        }
        v.terms.push_back(std::move(term));
    }
    return v;
}

json metadata_json(const std::map<std::string, std::string>& m) {
    json j = json::object();
    for (const auto& [k, v] : m) j[k] = v;
    return j;
}

std::map<std::string, std::string> metadata_from(const json& j, std::string_view source) {
    std::map<std::string, std::string> m;
    if (!j.is_object()) bad(source, "metadata must be an object");
    for (const auto& [k, v] : j.items()) m[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return m;
}

json fis_json(const fis::FisModel& m) {
    json j;
    j["kind"] = fis::to_string(m.kind);
    json inputs = json::array();
    for (const auto& v : m.inputs) inputs.push_back(variable_json(v, true));
    j["inputs"] = std::move(inputs);
    j["output"] = variable_json(m.output, m.kind == fis::ModelKind::Mamdani);
    json rules = json::array();
    for (const auto& r : m.rules) {
        json jr;
        json ante = json::array();
        for (const auto& a : r.antecedent) ante.push_back(a ? json(*a) : json(nullptr));
        jr["if"] = std::move(ante);
        jr["then"] = std::visit(overloaded{[](const fis::MamdaniTerm& t) { return json{{"term", t.label}}; },
                                           [](const fis::Constant& c) { return json{{"const", c.value}}; },
                                           [](const fis::Linear& l) {
                                               auto p = l.coefficients;
                                               p.push_back(l.intercept);
                                               return json{{"linear", p}};
                                           }},
                                r.consequent);
        jr["weight"] = r.weight;
        rules.push_back(std::move(jr));
    }
    j["rules"] = std::move(rules);
    j["config"] = {{"and_method", fis::to_string(m.config.and_method)}, {"resolution", m.config.resolution}};
    j["metadata"] = metadata_json(m.metadata);
    return j;
}

fis::FisModel fis_from(const json& j, std::string_view source) {
    fis::FisModel m;
    try {
        m.kind = fis::model_kind_from_string(str(need(j, "kind", source), source, "kind"));
    } catch (const Error& e) {
        bad(source, e.what());
    }
    const auto& inputs = need(j, "inputs", source);
    if (!inputs.is_array()) bad(source, "inputs must be an array");
    for (const auto& v : inputs) m.inputs.push_back(variable_from(v, true, source));
    m.output = variable_from(need(j, "output", source), m.kind == fis::ModelKind::Mamdani, source);
    const auto& rules = need(j, "rules", source);
    if (!rules.is_array()) bad(source, "rules must be an array");
    for (const auto& jr : rules) {
        fis::Rule r;
        const auto& ante = need(jr, "if", source);
        if (!ante.is_array()) bad(source, "rule 'if' must be an array");
        for (const auto& a : ante) {
            if (a.is_null())
                r.antecedent.emplace_back(std::nullopt);
            else
                r.antecedent.emplace_back(str(a, source, "antecedent label"));
        }
        const auto& then = need(jr, "then", source);
        if (then.contains("term"))
            r.consequent = fis::MamdaniTerm{str(then.at("term"), source, "consequent term")};
        else if (then.contains("const"))
            r.consequent = fis::Constant{num(then.at("const"), source, "consequent constant")};
        else if (then.contains("linear")) {
            auto p = nums(then.at("linear"), source, "linear consequent");
            if (p.empty()) bad(source, "linear consequent needs at least the intercept");
            fis::Linear l;
            l.intercept = p.back();
            p.pop_back();
            l.coefficients = std::move(p);
            r.consequent = std::move(l);
        } else {
            bad(source, "rule consequent needs one of 'term', 'const', 'linear'");
        }
        if (jr.contains("weight")) r.weight = num(jr.at("weight"), source, "rule weight");
        m.rules.push_back(std::move(r));
    }
    m.config = fis::InferenceConfig::defaults_for(m.kind);
    if (j.contains("config")) {
        const auto& c = j.at("config");
        if (c.contains("and_method")) {
            try {
                m.config.and_method = fis::and_method_from_string(str(c.at("and_method"), source, "and_method"));
            } catch (const Error& e) {
                bad(source, e.what());
            }
        }
        if (c.contains("resolution")) {
            if (!c.at("resolution").is_number_integer()) bad(source, "resolution must be an integer");
            m.config.resolution = c.at("resolution").get<int>();
        }
    }
    if (j.contains("metadata")) m.metadata = metadata_from(j.at("metadata"), source);
    return m;
}

json mlr_json(const MlrModel& m) {
    json j;
    j["kind"] = "mlr";
    j["columns"] = m.columns;
    j["intercept"] = m.intercept;
    j["coefficients"] = m.coefficients;
    j["metadata"] = metadata_json(m.metadata);
    return j;
}

MlrModel mlr_from(const json& j, std::string_view source) {
    MlrModel m;
    const auto& cols = need(j, "columns", source);
    if (!cols.is_array()) bad(source, "columns must be an array");
    for (const auto& c : cols) m.columns.push_back(str(c, source, "column name"));
    m.intercept = num(need(j, "intercept", source), source, "intercept");
    m.coefficients = nums(need(j, "coefficients", source), source, "coefficients");
    if (m.coefficients.size() != m.columns.size())
        bad(source, fmt::format("{} coefficients for {} columns", m.coefficients.size(), m.columns.size()));
    if (j.contains("metadata")) m.metadata = metadata_from(j.at("metadata"), source);
    return m;
}

json parse(std::string_view text, std::string_view source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        bad(source, fmt::format("invalid JSON ({})", e.what()));
    }
}

}  // namespace

double MlrModel::predict(std::span<const double> x) const {
    if (x.size() != coefficients.size())
        throw DataError(fmt::format("MLR model expects {} inputs, got {}", coefficients.size(), x.size()));
    double y = intercept;
    for (std::size_t i = 0; i < x.size(); ++i) y += coefficients[i] * x[i];
    return y;
}

std::string to_json(const fis::FisModel& model) { return fis_json(model).dump(2) + "\n"; }
std::string to_json(const MlrModel& model) { return mlr_json(model).dump(2) + "\n"; }

std::string to_json(const ModelBundle& bundle) {
    json j;
    j["dataset"] = bundle.dataset;
    json models = json::object();
    for (const auto& [k, m] : bundle.models) models[k] = fis_json(m);
    j["models"] = std::move(models);
    if (bundle.mlr) j["mlr"] = mlr_json(*bundle.mlr);
    return j.dump(2) + "\n";
}

fis::FisModel fis_from_json(std::string_view text, std::string_view source) {
    return fis_from(parse(text, source), source);
}

MlrModel mlr_from_json(std::string_view text, std::string_view source) {
    return mlr_from(parse(text, source), source);
}

ModelBundle bundle_from_json(std::string_view text, std::string_view source) {
    const auto j = parse(text, source);
    ModelBundle b;
    b.dataset = str(need(j, "dataset", source), source, "dataset");
    const auto& models = need(j, "models", source);
    if (!models.is_object()) bad(source, "models must be an object");
    for (const auto& [k, v] : models.items()) b.models.emplace(k, fis_from(v, fmt::format("{}:{}", source, k)));
    if (j.contains("mlr")) b.mlr = mlr_from(j.at("mlr"), source);
    return b;
}

std::map<std::string, MlrModel> mlr_table_from_json(std::string_view text, std::string_view source) {
    const auto j = parse(text, source);
    const auto& table = need(j, "mlr_by_dataset", source);
    if (!table.is_object()) bad(source, "mlr_by_dataset must be an object");
    std::map<std::string, MlrModel> out;
    for (const auto& [k, v] : table.items()) out.emplace(k, mlr_from(v, fmt::format("{}:{}", source, k)));
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot read '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    out << text;
}

fis::FisModel load_fis(const std::filesystem::path& path) { return fis_from_json(read_text(path), path.string()); }
MlrModel load_mlr(const std::filesystem::path& path) { return mlr_from_json(read_text(path), path.string()); }
ModelBundle load_bundle(const std::filesystem::path& path) {
    return bundle_from_json(read_text(path), path.string());
}

}  // namespace rfuzzy::io
