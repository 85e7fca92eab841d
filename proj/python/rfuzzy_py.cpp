#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rfuzzy/builder.hpp"
#include "rfuzzy/error.hpp"
#include "rfuzzy/experiment.hpp"
#include "rfuzzy/fis.hpp"
#include "rfuzzy/metrics.hpp"
#include "rfuzzy/model_io.hpp"
#include "rfuzzy/regression.hpp"
#include "rfuzzy/stat_tests.hpp"

namespace py = pybind11;
using namespace rfuzzy;

namespace {

fis::FisModel load_model(const std::string& text_or_path) {
    if (!text_or_path.empty() && text_or_path.front() == '{') return io::fis_from_json(text_or_path);
    return io::load_fis(text_or_path);
}

}  // namespace

PYBIND11_MODULE(_rfuzzy, m) {
    m.doc() = "Regression-assisted fuzzy effort estimation";

    auto base = py::register_exception<Error>(m, "Error", PyExc_ValueError);
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());
    py::register_exception<NoRuleFiredError>(m, "NoRuleFiredError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    py::class_<fis::InferenceEngine>(m, "Model")
        .def(py::init([](const std::string& src) { return fis::InferenceEngine(load_model(src)); }), py::arg("json_or_path"))
        .def("infer", [](const fis::InferenceEngine& e, const std::vector<double>& x) { return e.infer(x); })
        .def("infer_many",
             [](const fis::InferenceEngine& e, const std::vector<std::vector<double>>& rows) {
                 std::vector<double> out;
                 out.reserve(rows.size());
                 for (const auto& r : rows) out.push_back(e.infer(r));
                 return out;
             })
        .def_property_readonly("kind", [](const fis::InferenceEngine& e) { return std::string(fis::to_string(e.model().kind)); })
        .def_property_readonly("inputs", [](const fis::InferenceEngine& e) { return e.model().input_names(); })
        .def_property_readonly("rule_count", [](const fis::InferenceEngine& e) { return e.model().rules.size(); })
        .def("to_json", [](const fis::InferenceEngine& e) { return io::to_json(e.model()); });

    m.def("load_fixture", [](const std::filesystem::path& p) {
        const auto b = builder::load_fixture(p);
        std::map<std::string, std::string> out;
        for (const auto& [name, model] : b.models) out[name] = io::to_json(model);
        if (b.mlr) out["mlr"] = io::to_json(*b.mlr);
        return out;
    });

    m.def(
        "build",
        [](const std::string& kind, const std::vector<std::vector<double>>& x, const std::vector<double>& y,
           std::vector<std::string> names, int sections) {
            builder::TrainingSet t;
            if (names.empty())
                for (std::size_t j = 0; j < (x.empty() ? 0 : x.front().size()); ++j) names.push_back("x" + std::to_string(j));
            t.input_names = names;
            t.x = x;
            t.y = y;
            for (std::size_t i = 0; i < y.size(); ++i) t.ids.push_back("P" + std::to_string(i));
            builder::BuilderConfig cfg;
            cfg.output_sections = sections;
            return io::to_json(builder::build(fis::model_kind_from_string(kind), t, cfg));
        },
        py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("names") = std::vector<std::string>{},
        py::arg("sections") = 3);

    m.def(
        "fit_ols",
        [](const std::vector<std::vector<double>>& columns, const std::vector<double>& y) {
            std::vector<std::string> names;
            for (std::size_t j = 0; j < columns.size(); ++j) names.push_back("x" + std::to_string(j));
            const auto fit = regression::fit_ols(regression::DesignMatrix::from_columns(names, columns), y);
            py::dict d;
            d["coefficients"] = std::vector<double>(fit.coefficients.begin(), fit.coefficients.end());
            d["p_values"] = std::vector<double>(fit.p_values.begin(), fit.p_values.end());
            d["rss"] = fit.rss;
            d["r_squared"] = fit.r_squared;
            return d;
        },
        py::arg("columns"), py::arg("y"));

    m.def(
        "stepwise",
        [](const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns,
           const std::vector<double>& y, double p_enter, double p_remove) {
            return regression::stepwise_select(regression::DesignMatrix::from_columns(names, columns), y, {p_enter, p_remove})
                .selected_names;
        },
        py::arg("names"), py::arg("columns"), py::arg("y"), py::arg("p_enter") = 0.05, py::arg("p_remove") = 0.10);

    m.def(
        "evaluate",
        [](const std::vector<double>& actual, const std::vector<double>& predicted, int runs, std::uint64_t seed) {
            const auto r = metrics::evaluate("model", actual, predicted, metrics::random_guess_baseline(actual, runs, seed));
            py::dict d;
            d["mae"] = r.errors.mae;
            d["mbre"] = r.errors.mbre;
            d["mibre"] = r.errors.mibre;
            d["me"] = r.errors.me;
            d["sa"] = r.accuracy.sa;
            d["delta"] = r.accuracy.delta_signed ? py::cast(*r.accuracy.delta_signed) : py::none();
            return d;
        },
        py::arg("actual"), py::arg("predicted"), py::arg("runs") = 1000, py::arg("seed") = 1);

    m.def("wilcoxon", [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = stats::wilcoxon_signed_rank(a, b);
        return py::make_tuple(r.statistic, r.p_value, r.notes);
    });

    m.def(
        "scott_knott",
        [](const std::map<std::string, std::vector<double>>& samples, double alpha) {
            std::vector<stats::NamedSample> v(samples.begin(), samples.end());
            const auto g = stats::scott_knott(v, alpha);
            std::map<std::string, int> out;
            for (std::size_t i = 0; i < g.order.size(); ++i) out[g.order[i]] = g.group[i];
            return out;
        },
        py::arg("samples"), py::arg("alpha") = 0.05);

    m.def(
        "run",
        [](const std::string& command, const std::map<std::string, std::string>& settings) {
            experiment::ExperimentConfig cfg;
            std::ostringstream log, err;
            try {
                for (const auto& [k, v] : settings) cfg.set(k, v);
            } catch (const ConfigError& e) {
                return py::make_tuple(experiment::kExitConfig, std::string(), std::string(e.what()));
            }
            const int rc = experiment::run_command(command, cfg, log, err);
            return py::make_tuple(rc, log.str(), err.str());
        },
        py::arg("command"), py::arg("settings"));
}
