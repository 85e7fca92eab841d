#pragma once

// Builds Mamdani, zero-order and first-order Sugeno models from training
// projects: data-driven input partitions, grid rules, overlapping output
// sections with per-section means or regression consequents, and a seeded
// accept-only-improving tuner for membership breakpoints.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfuzzy/data.hpp"
#include "rfuzzy/fis.hpp"
#include "rfuzzy/model_io.hpp"
#include "rfuzzy/regression.hpp"

namespace rfuzzy::builder {

enum class SectionMode { EqualWidth, EqualCount };

struct BuilderConfig {
    int terms_per_input = 3;
    int output_sections = 3;
    double section_overlap = 0.25;  // fraction of section width, [0, 0.5)
    SectionMode section_mode = SectionMode::EqualWidth;
    /// Distance of the outer input feet from the extreme peaks, in units of
    /// the adjacent peak gap. 1 mirrors the gap; larger values keep far
    /// out-of-range inputs inside the outer terms.
    double outer_reach = 1.0;
    bool tuning = false;
    int tuning_folds = 5;
    int tuning_max_iterations = 50;
    double tuning_step = 0.10;  // fraction of the variable range
    std::uint64_t seed = 1;

    void check() const;  // throws ConfigError
};

/// Value of a named model input for one project: "AFP", "TeamSize" or a
/// resource-level indicator "ResourceLevel<k>".
double feature_value(const data::ProjectRecord& r, std::string_view name);

struct TrainingSet {
    std::vector<std::string> input_names;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> x;  // one row per project
    std::vector<double> y;               // effort

    std::size_t size() const { return y.size(); }
    std::vector<double> column(std::size_t j) const;
    TrainingSet subset(std::span<const std::size_t> rows) const;
    regression::DesignMatrix design() const;
};

TrainingSet make_training_set(const data::ProjectSet& ps, std::span<const std::string> inputs);

std::vector<std::string> term_labels(int count);

/// Triangles peaked at min, median and max (general count: evenly spaced
/// quantiles), with outer shoulders mirrored past the extremes. A 0/1 column
/// gets two trapezoids "zero" and "one" over [0, 1]. Throws DataError on a
/// constant column or fewer than three distinct values.
fis::FuzzyVariable input_partition(std::span<const double> values, const BuilderConfig& config,
                                   std::string name = "x");

struct OutputSection {
    int index = 0;
    double lo = 0.0, hi = 0.0;  // effort interval, inclusive
    std::vector<std::string> member_ids;
    std::vector<std::size_t> members;  // row indices into the training set
    double mean_effort = 0.0;
};

std::vector<OutputSection> output_sections(const TrainingSet& train, const BuilderConfig& config);

fis::FisModel build_mamdani(const TrainingSet& train, const BuilderConfig& config);
fis::FisModel build_sugeno_constant(const TrainingSet& train, const BuilderConfig& config);
fis::FisModel build_sugeno_linear(const TrainingSet& train, const BuilderConfig& config);
fis::FisModel build(fis::ModelKind kind, const TrainingSet& train, const BuilderConfig& config);

/// Rebuilds rules and consequents for fixed input partitions.
fis::FisModel assemble(fis::ModelKind kind, std::vector<fis::FuzzyVariable> inputs, const TrainingSet& train,
                       const BuilderConfig& config);

/// A first-order Sugeno model with one rule over full-coverage terms whose
/// consequent is the given regression; it reproduces the regression exactly.
fis::FisModel bridge_model(std::span<const std::string> input_names, std::span<const double> lo,
                           std::span<const double> hi, double intercept, std::span<const double> coefficients);
fis::FisModel bridge_model(const TrainingSet& train, const regression::OlsFit& fit);

struct TuneReport {
    double score_before = 0.0;  // mean held-out MAE
    double score_after = 0.0;
    int iterations = 0;
    int accepted_moves = 0;
};

/// Held-out MAE of rebuilding `model`'s partitions on k seeded folds.
double cross_validated_mae(const fis::FisModel& model, const TrainingSet& train, const BuilderConfig& config);

/// Coordinate descent over interior input breakpoints. Throws ConfigError
/// when folds < 2.
fis::FisModel tune(const fis::FisModel& model, const TrainingSet& train, const BuilderConfig& config,
                   TuneReport* report = nullptr);

/// Loads a fixture bundle and validates every model in it.
io::ModelBundle load_fixture(const std::filesystem::path& path);

}  // namespace rfuzzy::builder
