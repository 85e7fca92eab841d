// rfuzzy: regression-assisted fuzzy effort estimation experiments.
//
//   rfuzzy pipeline --synth n=468,noise=0.1 --out out
//   rfuzzy train    --out out --models mlr,sugeno1
//   rfuzzy evaluate --out out
//   rfuzzy run      --config experiment.cfg

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rfuzzy/experiment.hpp"

using rfuzzy::experiment::ExperimentConfig;

int main(int argc, char** argv) {
    CLI::App app{"Fuzzy logic effort estimation: dataset preparation, model training and evaluation"};
    app.require_subcommand(1);

    std::string config_path, input, synth, models, fis, outliers, datasets, out;
    std::optional<std::uint64_t> seed;
    bool tune = false;

    for (auto* sub : {app.add_subcommand("pipeline", "filter, band and split a project dataset"),
                      app.add_subcommand("train", "select inputs and build models per dataset"),
                      app.add_subcommand("evaluate", "score models on the test sets and write reports"),
                      app.add_subcommand("run", "pipeline, train and evaluate in one go")}) {
        sub->add_option("--config", config_path, "flat key = value experiment file");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--out", out, "output directory (default: out)");
        sub->add_option("--models", models, "comma list of mlr, mamdani, sugeno0, sugeno1");
        sub->add_option("--datasets", datasets, "comma list of d1..d4");
        sub->add_option("--fis", fis, "fixture bundle; skips building");
        sub->add_option("--outliers", outliers, "none | test | both")->check(CLI::IsMember({"none", "test", "test-only", "both"}));
        sub->add_option("--synth", synth, "synthetic data spec, e.g. n=468,noise=0.1");
        sub->add_option("--input", input, "project CSV");
        sub->add_flag("--tune", tune, "tune membership breakpoints on held-out folds");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rfuzzy::experiment::kExitConfig;
    }

    ExperimentConfig cfg;
    try {
        if (!config_path.empty()) cfg.load_file(config_path);
        if (seed) cfg.seed = *seed;
        if (!input.empty()) cfg.input = input;
        if (!synth.empty()) cfg.synth = synth;
        if (!models.empty()) cfg.set("models", models);
        if (!datasets.empty()) cfg.set("datasets", datasets);
        if (!fis.empty()) cfg.fis = fis;
        if (!outliers.empty()) cfg.set("outliers", outliers);
        if (!out.empty()) cfg.out = out;
        if (tune) cfg.builder.tuning = true;
    } catch (const rfuzzy::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return rfuzzy::experiment::kExitConfig;
    }

    const auto* sub = app.get_subcommands().front();
    return rfuzzy::experiment::run_command(sub->get_name(), cfg, std::cout, std::cerr);
}
