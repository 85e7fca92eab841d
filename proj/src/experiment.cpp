#include "rfuzzy/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rfuzzy/data.hpp"
#include "rfuzzy/metrics.hpp"
#include "rfuzzy/model_io.hpp"
#include "rfuzzy/regression.hpp"
#include "rfuzzy/rng.hpp"
#include "rfuzzy/stat_tests.hpp"

namespace rfuzzy::experiment {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kModelNames{"mlr", "mamdani", "sugeno0", "sugeno1"};
const std::set<std::string> kDatasetNames{"d1", "d2", "d3", "d4"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in{std::string(s)};
    while (std::getline(in, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    T v{};
    const auto s = trim(value);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw ConfigError(fmt::format("{}: cannot parse '{}'", key, value));
    return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
    const auto s = trim(value);
    if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
    if (s == "off" || s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(fmt::format("{}: expected on/off, got '{}'", key, value));
}

std::string_view to_string(OutlierPolicy p) {
    switch (p) {
        case OutlierPolicy::None: return "none";
        case OutlierPolicy::TestOnly: return "test";
        case OutlierPolicy::Both: return "both";
    }
    return "none";
}

std::string join(const std::vector<std::string>& v, std::string_view sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(sep) : "") + v[i];
    return out;
}

std::string num(double v) { return fmt::format("{:.6f}", v); }
std::string pval(double v) { return fmt::format("{:.6g}", v); }

int band_index(const std::string& dataset) { return dataset[1] - '0'; }

fs::path data_dir(const ExperimentConfig& c) { return c.out / "data"; }
fs::path model_dir(const ExperimentConfig& c) { return c.out / "models"; }
fs::path report_dir(const ExperimentConfig& c) { return c.out / "reports"; }

fis::ModelKind kind_of(const std::string& model) { return fis::model_kind_from_string(model); }

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

json header_json(const ExperimentConfig& c) {
    return json{{"config_hash", fmt::format("{:016x}", c.hash())}, {"seed", c.seed}};
}

std::map<std::string, std::string> header_map(const ExperimentConfig& c) {
    return {{"config_hash", fmt::format("{:016x}", c.hash())}, {"seed", std::to_string(c.seed)}};
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> notes;

    std::string render(const std::string& comment) const {
        std::string out = comment;
        out += join(header) + "\n";
        for (const auto& r : rows) out += join(r) + "\n";
        for (const auto& n : notes) out += "# " + n + "\n";
        return out;
    }
};

data::ProjectSet load_dataset(const fs::path& path) {
    try {
        return data::load_projects(path);
    } catch (const Error& e) {
        throw CommandError(kExitData, e.what());
    }
}

// ---------------------------------------------------------------------------
// pipeline

void summary_rows(Csv& csv, const std::string& name, const data::ProjectSet& ps) {
    auto add = [&](const std::string& var, std::vector<double> v) {
        if (v.empty()) {
            csv.rows.push_back({name, var, "0", "NA", "NA", "NA", "NA", "NA", "NA", "NA"});
            return;
        }
        const auto s = data::summarize(v);
        csv.rows.push_back({name, var, std::to_string(s.n), num(s.mean), num(s.stdev), num(s.min), num(s.max),
                            num(s.median), num(s.skewness), num(s.kurtosis)});
    };
    std::vector<double> afp, team, effort, prod;
    for (const auto& r : ps.records) {
        afp.push_back(r.afp);
        team.push_back(r.team_size);
        effort.push_back(r.effort);
        prod.push_back(r.productivity());
    }
    add("effort", effort);
    add("afp", afp);
    add("team_size", team);
    add("productivity", prod);
}

void write_set(const ExperimentConfig& c, const fs::path& path, const data::ProjectSet& ps) {
    data::write_projects(path, ps, c.header());
    data::write_provenance(path, ps, header_map(c));
}

data::ProjectSet drop_outliers(const data::ProjectSet& ps, const std::string& what) {
    if (ps.size() < 4) return ps.derive(ps.records, fmt::format("{} outlier removal skipped: fewer than 4 records", what));
    auto res = data::remove_outliers_iqr(ps);
    auto kept = res.kept;
    kept.provenance.back() += fmt::format(" [{}; Q1={:.6g}, Q3={:.6g}, bounds {:.6g}..{:.6g}; removed: {}]", what,
                                           res.report.q1, res.report.q3, res.report.lower, res.report.upper,
                                           res.report.removed_ids.empty() ? "none" : join(res.report.removed_ids, " "));
    return kept;
}

// ---------------------------------------------------------------------------
// train

struct Candidates {
    regression::DesignMatrix design;
    int baseline_level = 0;
};

Candidates candidate_inputs(const data::ProjectSet& ps) {
    std::vector<std::string> names{"AFP", "TeamSize"};
    std::vector<std::vector<double>> cols(2);
    std::vector<int> levels;
    for (const auto& r : ps.records) {
        cols[0].push_back(r.afp);
        cols[1].push_back(r.team_size);
        levels.push_back(r.resource_level);
    }
    std::map<int, int> freq;
    for (int l : levels) ++freq[l];
    Candidates c;
    int best = -1;
    for (const auto& [level, n] : freq)
        if (n > best) {
            best = n;
            c.baseline_level = level;
        }
    if (freq.size() >= 2) {
        auto d = regression::encode_dummies(levels, c.baseline_level);
        for (std::size_t k = 0; k < d.names.size(); ++k) {
            names.push_back(d.names[k]);
            cols.push_back(d.columns[k]);
        }
    }
    c.design = regression::DesignMatrix::from_columns(std::move(names), cols);
    return c;
}

json fit_json(const regression::OlsFit& fit) {
    json coef = json::array();
    for (Eigen::Index i = 0; i < fit.coefficients.size(); ++i) {
        coef.push_back({{"name", i == 0 ? std::string("(intercept)") : fit.names[static_cast<std::size_t>(i - 1)]},
                        {"estimate", fit.coefficients[i]},
                        {"std_error", fit.std_errors[i]},
                        {"t", fit.t_stats[i]},
                        {"p_value", fit.p_values[i]}});
    }
    return json{{"coefficients", coef}, {"r_squared", fit.r_squared}, {"rss", fit.rss}, {"dof", fit.dof}};
}

void train_dataset(const ExperimentConfig& c, const std::string& ds, std::ostream& log) {
    const auto train = load_dataset(data_dir(c) / (ds + "_train.csv"));
    if (train.size() < 5) throw CommandError(kExitData, fmt::format("{}: only {} training project(s)", ds, train.size()));

    std::vector<std::string> inputs;
    json sel = header_json(c);
    sel["dataset"] = ds;
    try {
        const auto cand = candidate_inputs(train);
        const auto step = regression::stepwise_select(cand.design, train.efforts(), {c.p_enter, c.p_remove});
        inputs = step.selected_names;
        sel["candidates"] = cand.design.names;
        sel["resource_baseline_level"] = cand.baseline_level;
        sel["variant"] = step.variant;
        sel["p_enter"] = c.p_enter;
        sel["p_remove"] = c.p_remove;
        json trace = json::array();
        for (const auto& s : step.trace) trace.push_back({{"action", s.action}, {"column", s.column}, {"p_value", s.p_value}});
        sel["trace"] = trace;
        sel["selected"] = inputs;
        sel["fit"] = fit_json(step.fit);

        io::MlrModel mlr;
        mlr.columns = inputs;
        mlr.intercept = step.fit.intercept();
        for (std::size_t k = 0; k < inputs.size(); ++k)
            mlr.coefficients.push_back(step.fit.coefficients[static_cast<Eigen::Index>(k) + 1]);
        mlr.metadata = header_map(c);
        mlr.metadata["dataset"] = ds;
        mlr.metadata["source"] = "stepwise OLS on the training set";
        if (std::count(c.models.begin(), c.models.end(), "mlr")) io::write_text(model_dir(c) / (ds + "_mlr.json"), io::to_json(mlr));
    } catch (const Error& e) {
        throw CommandError(kExitBuild, fmt::format("{}: input selection failed: {}", ds, e.what()));
    }
    write_json(model_dir(c) / (ds + "_selection.json"), sel);
    if (inputs.empty())
        throw CommandError(kExitBuild, fmt::format("{}: stepwise selection kept no inputs; fuzzy models need at least one", ds));
    log << fmt::format("{}: selected inputs {}\n", ds, join(inputs));

    auto bcfg = c.builder;
    bcfg.seed = c.seed;
    const auto ts = builder::make_training_set(train, inputs);
    for (const auto& m : c.models) {
        if (m == "mlr") continue;
        fis::FisModel model;
        try {
            model = builder::build(kind_of(m), ts, bcfg);
        } catch (const Error& e) {
            throw CommandError(kExitBuild, fmt::format("{}: building {} failed: {}", ds, m, e.what()));
        }
        for (const auto& [k, v] : header_map(c)) model.metadata[k] = v;
        model.metadata["dataset"] = ds;
        io::write_text(model_dir(c) / fmt::format("{}_{}.json", ds, m), io::to_json(model));
        log << fmt::format("{}: built {} ({} rules)\n", ds, m, model.rules.size());
    }
}

void train_fixture(const ExperimentConfig& c, std::ostream& log) {
    io::ModelBundle bundle;
    try {
        bundle = builder::load_fixture(c.fis);
    } catch (const Error& e) {
        throw CommandError(kExitBuild, e.what());
    }
    const auto& ds = bundle.dataset;
    if (!kDatasetNames.count(ds)) throw CommandError(kExitBuild, fmt::format("fixture dataset '{}' is not d1..d4", ds));
    for (const auto& m : c.models) {
        if (m == "mlr") {
            if (!bundle.mlr) continue;
            auto mlr = *bundle.mlr;
            for (const auto& [k, v] : header_map(c)) mlr.metadata[k] = v;
            io::write_text(model_dir(c) / (ds + "_mlr.json"), io::to_json(mlr));
            continue;
        }
        const auto it = bundle.models.find(m);
        if (it == bundle.models.end()) continue;
        auto model = it->second;
        for (const auto& [k, v] : header_map(c)) model.metadata[k] = v;
        io::write_text(model_dir(c) / fmt::format("{}_{}.json", ds, m), io::to_json(model));
        log << fmt::format("{}: {} loaded from fixture\n", ds, m);
    }
    json sel = header_json(c);
    sel["dataset"] = ds;
    sel["source"] = fmt::format("fixture {}", fs::path(c.fis).filename().string());
    sel["selected"] = bundle.models.empty() ? std::vector<std::string>{} : bundle.models.begin()->second.input_names();
    write_json(model_dir(c) / (ds + "_selection.json"), sel);
}

// ---------------------------------------------------------------------------
// evaluate

struct Predictions {
    std::string model;
    std::vector<double> values;
};

std::vector<double> features(const data::ProjectRecord& r, const std::vector<std::string>& names) {
    std::vector<double> x;
    for (const auto& n : names) x.push_back(builder::feature_value(r, n));
    return x;
}

Predictions predict(const ExperimentConfig& c, const std::string& ds, const std::string& m, const data::ProjectSet& test,
                    std::vector<std::string>& failures) {
    Predictions p{m, {}};
    const auto path = model_dir(c) / fmt::format("{}_{}.json", ds, m);
    std::vector<std::string> bad;
    std::string first_error;
    try {
        if (m == "mlr") {
            const auto mlr = io::load_mlr(path);
            for (const auto& r : test.records) p.values.push_back(mlr.predict(features(r, mlr.columns)));
        } else {
            const fis::InferenceEngine engine(io::load_fis(path));
            const auto names = engine.model().input_names();
            for (const auto& r : test.records) {
                try {
                    p.values.push_back(engine.infer(features(r, names)));
                } catch (const Error& e) {
                    if (first_error.empty()) first_error = e.what();
                    bad.push_back(r.id);
                    p.values.push_back(std::nan(""));
                }
            }
        }
    } catch (const Error& e) {
        failures.push_back(fmt::format("{} {}: {}", ds, m, e.what()));
        return p;
    }
    if (!bad.empty())
        failures.push_back(
            fmt::format("{} {}: no prediction for test project(s) {} ({})", ds, m, join(bad, " "), first_error));
    return p;
}

std::vector<double> abs_errors(const std::vector<double>& actual, const std::vector<double>& pred) {
    std::vector<double> e;
    for (std::size_t i = 0; i < actual.size(); ++i) e.push_back(std::fabs(actual[i] - pred[i]));
    return e;
}

void evaluate_dataset(const ExperimentConfig& c, const std::string& ds, std::ostream& log, std::string& summary) {
    const auto test = load_dataset(data_dir(c) / (ds + "_test.csv"));
    if (test.size() < 2) throw CommandError(kExitData, fmt::format("{}: only {} test project(s)", ds, test.size()));
    const auto actual = test.efforts();

    std::vector<std::string> failures;
    std::vector<Predictions> preds;
    for (const auto& m : c.models) preds.push_back(predict(c, ds, m, test, failures));
    if (!failures.empty()) throw CommandError(kExitEvaluate, join(failures, "\n"));

    const auto hdr = c.header();
    const auto rep = report_dir(c);

    Csv pcsv;
    pcsv.header = {"id", "actual"};
    for (const auto& p : preds) pcsv.header.push_back(p.model);
    for (std::size_t i = 0; i < test.size(); ++i) {
        std::vector<std::string> row{test.records[i].id, num(actual[i])};
        for (const auto& p : preds) row.push_back(num(p.values[i]));
        pcsv.rows.push_back(std::move(row));
    }
    io::write_text(rep / (ds + "_predictions.csv"), pcsv.render(hdr));

    std::vector<metrics::EvalReport> reports;
    metrics::GuessBaseline baseline;
    try {
        baseline = metrics::random_guess_baseline(actual, c.baseline_runs, c.seed);
        for (const auto& p : preds) reports.push_back(metrics::evaluate(p.model, actual, p.values, baseline));
    } catch (const Error& e) {
        throw CommandError(kExitEvaluate, fmt::format("{}: {}", ds, e.what()));
    }
    Csv mcsv;
    mcsv.header = metrics::report_header();
    for (const auto& r : reports) mcsv.rows.push_back(metrics::report_row(r));
    mcsv.notes.push_back(fmt::format("guessing baseline: MAE_p0={:.6f} SP0={:.6f} runs={} exact={:.6f}",
                                     baseline.mae_p_bar, baseline.sp0, baseline.runs, baseline.exact_mean));
    mcsv.notes.push_back("SA in percent; Delta is |delta_signed|; ME = mean(actual - predicted)");
    io::write_text(rep / (ds + "_metrics.csv"), mcsv.render(hdr));
    const auto table = metrics::render_reports_text(reports);
    io::write_text(rep / (ds + "_metrics.txt"), hdr + table);
    summary += fmt::format("== {} (test n={}) ==\n{}", ds, test.size(), table);

    std::vector<std::vector<double>> errs;
    for (const auto& p : preds) errs.push_back(abs_errors(actual, p.values));

    Csv wcsv;
    wcsv.header = {"model"};
    for (const auto& p : preds) wcsv.header.push_back(p.model);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        std::vector<std::string> row{preds[i].model};
        for (std::size_t j = 0; j < preds.size(); ++j) {
            if (i == j) {
                row.push_back("X");
                continue;
            }
            try {
                row.push_back(pval(stats::wilcoxon_signed_rank(errs[i], errs[j]).p_value));
            } catch (const DataError& e) {
                row.push_back("—");
                if (i < j) wcsv.notes.push_back(fmt::format("{} vs {}: {}", preds[i].model, preds[j].model, e.what()));
            }
        }
        wcsv.rows.push_back(std::move(row));
    }
    wcsv.notes.push_back(fmt::format("two-sided signed-rank test on paired absolute errors; exact for n <= {}",
                                     stats::kWilcoxonExactMax));
    io::write_text(rep / (ds + "_wilcoxon.csv"), wcsv.render(hdr));

    Csv icsv;
    icsv.header = {"model", "mean_abs_error", "ci_lower", "ci_upper", "sd", "n"};
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto s = data::summarize(errs[i]);
        const double n = static_cast<double>(s.n);
        const double t = boost::math::quantile(boost::math::students_t(n - 1.0), 0.975);
        const double half = t * s.stdev / std::sqrt(n);
        icsv.rows.push_back({preds[i].model, num(s.mean), num(s.mean - half), num(s.mean + half), num(s.stdev),
                             std::to_string(s.n)});
    }
    icsv.notes.push_back("95% t interval of the mean absolute error");
    io::write_text(rep / (ds + "_interval.csv"), icsv.render(hdr));

    if (preds.size() < 2) return;
    Csv ncsv;
    ncsv.header = {"model", "stage", "A2_star", "p_value"};
    bool all_normal = true;
    bool gate = test.size() >= 8;
    for (std::size_t i = 0; i < preds.size() && gate; ++i) {
        try {
            const auto ad = stats::anderson_darling_normality(errs[i]);
            ncsv.rows.push_back({preds[i].model, "raw", pval(ad.statistic), pval(ad.p_value)});
            all_normal = all_normal && ad.p_value >= c.alpha;
        } catch (const DataError& e) {
            ncsv.notes.push_back(fmt::format("{}: {}", preds[i].model, e.what()));
            gate = false;
        }
    }
    std::vector<stats::NamedSample> samples;
    std::string transform = "none";
    if (gate && !all_normal) {
        std::vector<double> pooled;
        for (const auto& e : errs) pooled.insert(pooled.end(), e.begin(), e.end());
        try {
            const auto bc = stats::box_cox(pooled);
            transform = fmt::format("box-cox lambda={:.6f} shift={:.6g} (pooled absolute errors)", bc.lambda, bc.shift);
            for (std::size_t i = 0; i < preds.size(); ++i) {
                std::vector<double> t;
                for (double v : errs[i]) t.push_back(stats::box_cox_transform(v + bc.shift, bc.lambda));
                try {
                    const auto ad = stats::anderson_darling_normality(t);
                    ncsv.rows.push_back({preds[i].model, "box-cox", pval(ad.statistic), pval(ad.p_value)});
                } catch (const DataError& e) {
                    ncsv.notes.push_back(fmt::format("{} after transform: {}", preds[i].model, e.what()));
                }
                samples.emplace_back(preds[i].model, std::move(t));
            }
        } catch (const DataError& e) {
            ncsv.notes.push_back(fmt::format("box-cox skipped: {}", e.what()));
            samples.clear();
        }
    }
    if (samples.empty())
        for (std::size_t i = 0; i < preds.size(); ++i) samples.emplace_back(preds[i].model, errs[i]);
    if (!gate) ncsv.notes.push_back("normality gate skipped (needs n >= 8 test projects)");
    ncsv.notes.push_back(fmt::format("transform: {}", transform));
    io::write_text(rep / (ds + "_normality.csv"), ncsv.render(hdr));

    Csv scsv;
    scsv.header = {"rank", "model", "group", "mean"};
    try {
        const auto sk = stats::scott_knott(samples, c.alpha);
        const int groups = sk.group.empty() ? 0 : sk.group.back();
        // Rank 1 is the best model: lowest mean (transformed) absolute error.
        for (std::size_t i = 0; i < sk.order.size(); ++i)
            scsv.rows.push_back({std::to_string(i + 1), sk.order[i], std::to_string(sk.group[i]), num(sk.means[i])});
        scsv.notes.push_back(fmt::format("{} group(s); alpha={}; transform: {}", groups, c.alpha, transform));
        scsv.notes.push_back(sk.estimator);
    } catch (const Error& e) {
        scsv.notes.push_back(fmt::format("scott-knott skipped: {}", e.what()));
    }
    io::write_text(rep / (ds + "_scottknott.csv"), scsv.render(hdr));
    log << fmt::format("{}: evaluated {} model(s) on {} test project(s)\n", ds, preds.size(), test.size());
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void ExperimentConfig::set(std::string_view key_in, std::string_view value_in) {
    const auto key = trim(key_in);
    const auto value = trim(value_in);
    auto& b = builder;
    if (key == "input")
        input = value;
    else if (key == "synth")
        synth = value;
    else if (key == "seed")
        seed = parse_number<std::uint64_t>(key, value);
    else if (key == "split_ratio")
        split_ratio = parse_number<double>(key, value);
    else if (key == "outliers") {
        if (value == "none")
            outliers = OutlierPolicy::None;
        else if (value == "test" || value == "test-only")
            outliers = OutlierPolicy::TestOnly;
        else if (value == "both")
            outliers = OutlierPolicy::Both;
        else
            throw ConfigError(fmt::format("outliers: expected none, test or both, got '{}'", value));
    } else if (key == "models")
        models = split_list(value);
    else if (key == "datasets")
        datasets = split_list(value);
    else if (key == "out")
        out = value;
    else if (key == "fis")
        fis = value;
    else if (key == "baseline_runs")
        baseline_runs = parse_number<int>(key, value);
    else if (key == "p_enter")
        p_enter = parse_number<double>(key, value);
    else if (key == "p_remove")
        p_remove = parse_number<double>(key, value);
    else if (key == "alpha")
        alpha = parse_number<double>(key, value);
    else if (key == "terms_per_input")
        b.terms_per_input = parse_number<int>(key, value);
    else if (key == "output_sections")
        b.output_sections = parse_number<int>(key, value);
    else if (key == "section_overlap")
        b.section_overlap = parse_number<double>(key, value);
    else if (key == "section_mode") {
        if (value == "equal_width")
            b.section_mode = builder::SectionMode::EqualWidth;
        else if (value == "equal_count")
            b.section_mode = builder::SectionMode::EqualCount;
        else
            throw ConfigError(fmt::format("section_mode: expected equal_width or equal_count, got '{}'", value));
    } else if (key == "outer_reach")
        b.outer_reach = parse_number<double>(key, value);
    else if (key == "tuning")
        b.tuning = parse_bool(key, value);
    else if (key == "tuning_folds")
        b.tuning_folds = parse_number<int>(key, value);
    else if (key == "tuning_max_iterations")
        b.tuning_max_iterations = parse_number<int>(key, value);
    else if (key == "tuning_step")
        b.tuning_step = parse_number<double>(key, value);
    else
        throw ConfigError(fmt::format("unknown config key '{}'", key));
}

void ExperimentConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(fmt::format("{}:{}: expected key = value", path.string(), lineno));
        try {
            set(line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
}

void ExperimentConfig::check() const {
    if (models.empty()) throw ConfigError("at least one model is required");
    for (const auto& m : models)
        if (!kModelNames.count(m)) throw ConfigError(fmt::format("unknown model '{}' (mlr, mamdani, sugeno0, sugeno1)", m));
    if (datasets.empty()) throw ConfigError("at least one dataset is required");
    for (const auto& d : datasets)
        if (!kDatasetNames.count(d)) throw ConfigError(fmt::format("unknown dataset '{}' (d1..d4)", d));
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must be in (0, 1)");
    if (baseline_runs < 2) throw ConfigError("baseline_runs must be >= 2");
    if (!(p_enter > 0.0 && p_enter < 1.0 && p_remove > 0.0 && p_remove < 1.0))
        throw ConfigError("p_enter and p_remove must be in (0, 1)");
    if (p_enter > p_remove) throw ConfigError("p_enter must not exceed p_remove");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
    builder.check();
    if (builder.tuning && builder.tuning_folds < 2) throw ConfigError("tuning_folds must be >= 2");
}

std::string ExperimentConfig::canonical() const {
    const auto& b = builder;
    std::map<std::string, std::string> kv{
        {"alpha", fmt::format("{}", alpha)},
        {"baseline_runs", std::to_string(baseline_runs)},
        {"datasets", join(datasets)},
        {"fis", fis},
        {"input", input},
        {"models", join(models)},
        {"outer_reach", fmt::format("{}", b.outer_reach)},
        {"outliers", std::string(to_string(outliers))},
        {"output_sections", std::to_string(b.output_sections)},
        {"p_enter", fmt::format("{}", p_enter)},
        {"p_remove", fmt::format("{}", p_remove)},
        {"section_mode", b.section_mode == builder::SectionMode::EqualWidth ? "equal_width" : "equal_count"},
        {"section_overlap", fmt::format("{}", b.section_overlap)},
        {"seed", std::to_string(seed)},
        {"split_ratio", fmt::format("{}", split_ratio)},
        {"synth", synth},
        {"terms_per_input", std::to_string(b.terms_per_input)},
        {"tuning", b.tuning ? "on" : "off"},
        {"tuning_folds", std::to_string(b.tuning_folds)},
        {"tuning_max_iterations", std::to_string(b.tuning_max_iterations)},
        {"tuning_step", fmt::format("{}", b.tuning_step)},
    };
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

std::string ExperimentConfig::header() const { return fmt::format("# config_hash={:016x} seed={}\n", hash(), seed); }

void cmd_pipeline(const ExperimentConfig& c, std::ostream& log) {
    c.check();
    if (c.input.empty() == c.synth.empty()) throw ConfigError("pipeline needs exactly one of --input or --synth");
    data::ProjectSet raw;
    try {
        if (!c.input.empty()) {
            raw = data::load_projects(c.input);
        } else {
            raw = data::synth_generate(data::parse_synth_spec(c.synth, c.seed));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw CommandError(kExitData, e.what());
    }

    try {
        fs::create_directories(data_dir(c));
        const auto filtered = data::filter_isbsg(raw);
        const auto bands = data::partition_by_productivity(filtered);
        Csv summary;
        summary.header = {"dataset", "variable", "n", "mean", "stdev", "min", "max", "median", "skewness", "kurtosis"};
        summary.notes.push_back(fmt::format("excluded (productivity < {}): {}", data::kBandEdges[0], bands.excluded));
        for (const auto& ds : c.datasets) {
            const int bi = band_index(ds);
            const auto& set = bands.band(bi);
            write_set(c, data_dir(c) / (ds + ".csv"), set);
            summary_rows(summary, ds, set);
            auto split = data::split_train_test(set, c.split_ratio, splitmix64(c.seed + static_cast<std::uint64_t>(bi)));
            if (c.outliers == OutlierPolicy::Both) split.train = drop_outliers(split.train, "train");
            if (c.outliers != OutlierPolicy::None) split.test = drop_outliers(split.test, "test");
            write_set(c, data_dir(c) / (ds + "_train.csv"), split.train);
            write_set(c, data_dir(c) / (ds + "_test.csv"), split.test);
            log << fmt::format("{}: {} projects -> train {}, test {}\n", ds, set.size(), split.train.size(),
                               split.test.size());
        }
        io::write_text(data_dir(c) / "summary.csv", summary.render(c.header()));
    } catch (const CommandError&) {
        throw;
    } catch (const Error& e) {
        throw CommandError(kExitData, e.what());
    }
}

void cmd_train(const ExperimentConfig& c, std::ostream& log) {
    c.check();
    fs::create_directories(model_dir(c));
    if (!c.fis.empty()) {
        train_fixture(c, log);
        return;
    }
    for (const auto& ds : c.datasets) train_dataset(c, ds, log);
}

void cmd_evaluate(const ExperimentConfig& c, std::ostream& log) {
    c.check();
    fs::create_directories(report_dir(c));
    std::vector<std::string> datasets = c.datasets;
    if (!c.fis.empty()) {
        try {
            datasets = {io::load_bundle(c.fis).dataset};
        } catch (const Error& e) {
            throw CommandError(kExitEvaluate, e.what());
        }
    }
    std::string summary = c.header();
    for (const auto& ds : datasets) evaluate_dataset(c, ds, log, summary);
    io::write_text(report_dir(c) / "summary.txt", summary);
}

int run_command(std::string_view command, const ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        if (command == "pipeline")
            cmd_pipeline(cfg, log);
        else if (command == "train")
            cmd_train(cfg, log);
        else if (command == "evaluate")
            cmd_evaluate(cfg, log);
        else if (command == "run") {
            cmd_pipeline(cfg, log);
            cmd_train(cfg, log);
            cmd_evaluate(cfg, log);
        } else
            throw ConfigError(fmt::format("unknown command '{}'", command));
    } catch (const CommandError& e) {
        err << "error: " << e.what() << "\n";
        return e.code();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return command == "evaluate" ? kExitEvaluate : kExitBuild;
    }
    return kExitOk;
}

}  // namespace rfuzzy::experiment
