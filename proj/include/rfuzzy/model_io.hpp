#pragma once

// JSON model files. Per variable a list of {label, type: trimf|trapmf, params};
// rules as {"if": [label|null, ...], "then": {"term"}|{"const"}|{"linear"}}
// with the linear intercept stored last.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfuzzy/fis.hpp"

namespace rfuzzy::io {

struct MlrModel {
    std::vector<std::string> columns;
    double intercept = 0.0;
    std::vector<double> coefficients;  // aligned with columns
    std::map<std::string, std::string> metadata;

    double predict(std::span<const double> x) const;
};

/// Fuzzy models and the regression baseline for one dataset.
struct ModelBundle {
    std::string dataset;
    std::map<std::string, fis::FisModel> models;  // keyed mamdani / sugeno0 / sugeno1
    std::optional<MlrModel> mlr;
};

std::string to_json(const fis::FisModel& model);
std::string to_json(const MlrModel& model);
std::string to_json(const ModelBundle& bundle);

/// Throws ValidationError on malformed documents. The model is not
/// semantically validated here; see fis::validate_model.
fis::FisModel fis_from_json(std::string_view text, std::string_view source = "<memory>");
MlrModel mlr_from_json(std::string_view text, std::string_view source = "<memory>");
ModelBundle bundle_from_json(std::string_view text, std::string_view source = "<memory>");

/// Reads {"mlr_by_dataset": {"d1": {...}, ...}}.
std::map<std::string, MlrModel> mlr_table_from_json(std::string_view text, std::string_view source = "<memory>");

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

fis::FisModel load_fis(const std::filesystem::path& path);
MlrModel load_mlr(const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace rfuzzy::io
