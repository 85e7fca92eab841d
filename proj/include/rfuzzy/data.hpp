#pragma once

// Project records and the dataset preparation protocol: ingest, quality and
// development-type filtering, productivity banding, train/test splitting,
// IQR outlier removal, summary statistics and synthetic stand-in data.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rfuzzy::data {

enum class DevType { New, Enhancement, Redevelopment, Other };
enum class Quality { A, B, C, D };

std::string_view to_string(DevType t);
std::string_view to_string(Quality q);
DevType dev_type_from_string(std::string_view s);
Quality quality_from_string(std::string_view s);

struct ProjectRecord {
    std::string id;
    double afp = 0.0;        // adjusted function points
    double team_size = 0.0;  // persons
    int resource_level = 1;  // 1..4
    DevType dev_type = DevType::New;
    Quality quality = Quality::A;
    double effort = 0.0;  // person-hours

    /// Person-hours per function point, always recomputed.
    double productivity() const { return effort / afp; }
    bool complete() const;

    bool operator==(const ProjectRecord&) const = default;
};

struct ProjectSet {
    std::vector<ProjectRecord> records;
    std::vector<std::string> provenance;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    std::vector<double> efforts() const;
    ProjectSet derive(std::vector<ProjectRecord> kept, std::string step) const;
};

/// Reads the CSV schema `id,afp,team_size,resource_level,dev_type,quality,effort`
/// (header required, column order free). Rows with missing or unparseable
/// fields are dropped and counted in the provenance. Throws DataError on an
/// unreadable file, a missing column or duplicate ids.
ProjectSet load_projects(const std::filesystem::path& path);
ProjectSet parse_projects(std::string_view csv_text, std::string_view source = "<memory>");

void write_projects(const std::filesystem::path& path, const ProjectSet& ps, std::string_view comment_header = {});
/// Writes the provenance lineage as JSON next to a dataset file. `extra`
/// fields (e.g. config hash and seed) come first.
void write_provenance(const std::filesystem::path& dataset_path, const ProjectSet& ps,
                      const std::map<std::string, std::string>& extra = {});

/// Quality A/B, new development only, complete records. Each step appends its
/// surviving count to the provenance.
ProjectSet filter_isbsg(const ProjectSet& ps);

struct ProductivityBands {
    ProjectSet d1;  // 0.2 <= P < 10
    ProjectSet d2;  // 10 <= P < 20
    ProjectSet d3;  // P >= 20
    ProjectSet d4;  // union of the three
    std::size_t excluded = 0;  // P < 0.2

    const ProjectSet& band(int index) const;  // 1..4
};

inline constexpr double kBandEdges[] = {0.2, 10.0, 20.0};

ProductivityBands partition_by_productivity(const ProjectSet& ps);

/// round-half-up(ratio * n) training records, chosen by a seeded uniform
/// permutation; both halves keep input order.
std::size_t train_count(std::size_t n, double ratio);

struct Split {
    ProjectSet train;
    ProjectSet test;
};

Split split_train_test(const ProjectSet& ps, double ratio, std::uint64_t seed);

/// Quantile by linear interpolation of order statistics at p * (n - 1).
double quantile_linear(std::span<const double> sorted, double p);

struct OutlierReport {
    double q1 = 0.0, q3 = 0.0, iqr = 0.0;
    double lower = 0.0, upper = 0.0;
    std::vector<std::string> removed_ids;
    std::string quartile_method = "linear interpolation at p*(n-1)";
};

struct OutlierResult {
    ProjectSet kept;
    OutlierReport report;
};

/// Drops records whose effort lies outside [Q1 - 1.5 IQR, Q3 + 1.5 IQR].
OutlierResult remove_outliers_iqr(const ProjectSet& ps);

/// Value-level form of the same rule; returns the kept-mask.
std::vector<bool> iqr_inliers(std::span<const double> values, OutlierReport* report = nullptr);

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0, stdev = 0.0, min = 0.0, max = 0.0, median = 0.0;
    double skewness = 0.0;  // adjusted Fisher-Pearson G1
    double kurtosis = 0.0;  // bias-corrected excess kurtosis G2
};

SummaryStats summarize(std::span<const double> values);
SummaryStats summarize(const ProjectSet& ps);

struct SynthSpec {
    std::size_t n = 468;
    std::array<double, 3> band_fractions{245.0 / 468.0, 116.0 / 468.0, 107.0 / 468.0};
    double band3_max = 330.0;  // upper productivity bound for P >= 20
    double afp_log_mean = 5.8;
    double afp_log_sd = 1.0;
    double team_mean = 6.0;  // mean of the geometric-like team size
    std::array<double, 4> resource_probs{0.6, 0.25, 0.1, 0.05};
    double noise = 0.0;  // relative sd of the multiplicative effort noise
    std::uint64_t seed = 1;
};

/// Band counts by largest remainder, so they always sum to n.
std::array<std::size_t, 3> band_counts(const SynthSpec& spec);

/// Deterministic given the seed. With noise = 0 every record's productivity
/// lies inside its requested band.
ProjectSet synth_generate(const SynthSpec& spec);

/// Parses "n=468,bands=245:116:107,noise=0.1,seed=3" (any subset of keys).
SynthSpec parse_synth_spec(std::string_view text, std::uint64_t default_seed);

}  // namespace rfuzzy::data
