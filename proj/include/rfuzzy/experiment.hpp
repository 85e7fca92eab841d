#pragma once

// Experiment driver behind the command line: dataset preparation, model
// training and evaluation reports, all governed by one flat config.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rfuzzy/builder.hpp"
#include "rfuzzy/error.hpp"

namespace rfuzzy::experiment {

enum class OutlierPolicy { None, TestOnly, Both };

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitBuild = 4;
inline constexpr int kExitEvaluate = 5;

class CommandError : public Error {
public:
    CommandError(int code, const std::string& what) : Error(what), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

struct ExperimentConfig {
    std::string input;  // CSV path; exclusive with synth
    std::string synth;  // e.g. "n=468,noise=0.1"
    std::uint64_t seed = 1;
    double split_ratio = 0.7;
    OutlierPolicy outliers = OutlierPolicy::None;
    std::vector<std::string> models{"mlr", "mamdani", "sugeno0", "sugeno1"};
    std::vector<std::string> datasets{"d1", "d2", "d3", "d4"};
    builder::BuilderConfig builder;
    int baseline_runs = 1000;
    double p_enter = 0.05;
    double p_remove = 0.10;
    double alpha = 0.05;
    std::string fis;  // fixture bundle; skips building
    std::filesystem::path out = "out";

    /// Throws ConfigError on an unknown key or malformed value.
    void set(std::string_view key, std::string_view value);
    /// `key = value` lines; '#' starts a comment.
    void load_file(const std::filesystem::path& path);
    void check() const;

    /// Sorted key=value lines of every setting that affects outputs.
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a 64 of canonical()
    std::string header() const;  // "# config_hash=<hex> seed=<n>\n"
};

std::uint64_t fnv1a64(std::string_view text);

void cmd_pipeline(const ExperimentConfig& cfg, std::ostream& log);
void cmd_train(const ExperimentConfig& cfg, std::ostream& log);
void cmd_evaluate(const ExperimentConfig& cfg, std::ostream& log);

/// Runs "pipeline", "train", "evaluate" or "run" (all three) and maps
/// failures to exit codes, printing the message to `err`.
int run_command(std::string_view command, const ExperimentConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace rfuzzy::experiment
