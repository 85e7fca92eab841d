#include "rfuzzy/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "rfuzzy/error.hpp"
#include "rfuzzy/rng.hpp"

namespace rfuzzy::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return r.ec == std::errc() && r.ptr == end && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return r.ec == std::errc() && r.ptr == end;
}

constexpr std::array<std::string_view, 7> kColumns{"id",       "afp",     "team_size", "resource_level",
                                                   "dev_type", "quality", "effort"};

}  // namespace

std::string_view to_string(DevType t) {
    switch (t) {
        case DevType::New: return "new";
        case DevType::Enhancement: return "enhancement";
        case DevType::Redevelopment: return "redevelopment";
        case DevType::Other: return "other";
    }
    return "other";
}

std::string_view to_string(Quality q) {
    static constexpr std::string_view names[] = {"A", "B", "C", "D"};
    return names[static_cast<int>(q)];
}

DevType dev_type_from_string(std::string_view s) {
    const auto v = lower(trim(s));
    if (v == "new" || v == "new development") return DevType::New;
    if (v == "enhancement") return DevType::Enhancement;
    if (v == "redevelopment" || v == "re-development") return DevType::Redevelopment;
    if (v == "other") return DevType::Other;
    throw DataError(fmt::format("unknown development type '{}'", s));
}

Quality quality_from_string(std::string_view s) {
    const auto v = trim(s);
    if (v.size() == 1) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(v[0])));
        if (c >= 'A' && c <= 'D') return static_cast<Quality>(c - 'A');
    }
    throw DataError(fmt::format("unknown data quality '{}'", s));
}

bool ProjectRecord::complete() const {
    return !id.empty() && std::isfinite(afp) && afp > 0.0 && std::isfinite(team_size) && team_size > 0.0 &&
           resource_level >= 1 && resource_level <= 4 && std::isfinite(effort) && effort > 0.0;
}

std::vector<double> ProjectSet::efforts() const {
    std::vector<double> e;
    e.reserve(records.size());
    for (const auto& r : records) e.push_back(r.effort);
    return e;
}

ProjectSet ProjectSet::derive(std::vector<ProjectRecord> kept, std::string step) const {
    ProjectSet out;
    out.records = std::move(kept);
    out.provenance = provenance;
    out.provenance.push_back(std::move(step));
    return out;
}

// ---------------------------------------------------------------------------
// I/O

ProjectSet parse_projects(std::string_view text, std::string_view source) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::map<std::string, std::size_t> col;
    bool have_header = false;
    std::size_t line_no = 0, dropped = 0;
    std::vector<std::string> drop_notes;
    ProjectSet ps;
    std::set<std::string> ids;

    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto fields = split_fields(line);
        if (!have_header) {
            for (std::size_t i = 0; i < fields.size(); ++i) col[lower(fields[i])] = i;
            for (auto name : kColumns)
                if (!col.count(std::string(name)))
                    throw DataError(fmt::format("{}: header lacks required column '{}'", source, name));
            have_header = true;
            continue;
        }
        auto field = [&](std::string_view name) -> std::string_view {
            const auto idx = col.at(std::string(name));
            return idx < fields.size() ? fields[idx] : std::string_view{};
        };
        ProjectRecord r;
        r.id = std::string(field("id"));
        bool ok = !r.id.empty() && parse_double(field("afp"), r.afp) && parse_double(field("team_size"), r.team_size) &&
                  parse_int(field("resource_level"), r.resource_level) && parse_double(field("effort"), r.effort);
        if (ok) {
            try {
                r.dev_type = dev_type_from_string(field("dev_type"));
                r.quality = quality_from_string(field("quality"));
            } catch (const DataError&) {
                ok = false;
            }
        }
        ok = ok && r.complete();
        if (!ok) {
            ++dropped;
            if (drop_notes.size() < 20) drop_notes.push_back(fmt::format("line {}", line_no));
            continue;
        }
        if (!ids.insert(r.id).second) throw DataError(fmt::format("{}: duplicate project id '{}'", source, r.id));
        ps.records.push_back(std::move(r));
    }
    if (!have_header) throw DataError(fmt::format("{}: missing CSV header", source));

    ps.provenance.push_back(fmt::format("loaded {} record(s) from {}", ps.records.size(), source));
    std::string where;
    for (const auto& n : drop_notes) where += (where.empty() ? "" : ", ") + n;
    ps.provenance.push_back(fmt::format("dropped {} row(s) with missing or invalid fields{}", dropped,
                                        dropped ? " (" + where + ")" : ""));
    return ps;
}

ProjectSet load_projects(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(fmt::format("cannot read '{}'", path.string()));
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_projects(buf.str(), path.string());
}

void write_projects(const std::filesystem::path& path, const ProjectSet& ps, std::string_view comment_header) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(fmt::format("cannot write '{}'", path.string()));
    f << comment_header;
    f << "id,afp,team_size,resource_level,dev_type,quality,effort\n";
    for (const auto& r : ps.records)
        f << fmt::format("{},{},{},{},{},{},{}\n", r.id, r.afp, r.team_size, r.resource_level, to_string(r.dev_type),
                         to_string(r.quality), r.effort);
}

void write_provenance(const std::filesystem::path& dataset_path, const ProjectSet& ps,
                      const std::map<std::string, std::string>& extra) {
    auto meta = dataset_path;
    meta.replace_extension(".meta.json");
    nlohmann::ordered_json j;
    for (const auto& [k, v] : extra) j[k] = v;
    j["dataset"] = dataset_path.filename().string();
    j["records"] = ps.size();
    j["provenance"] = ps.provenance;
    std::ofstream f(meta, std::ios::binary);
    if (!f) throw DataError(fmt::format("cannot write '{}'", meta.string()));
    f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Protocol steps

ProjectSet filter_isbsg(const ProjectSet& ps) {
    ProjectSet cur = ps.derive(ps.records, fmt::format("filter input: {}", ps.size()));
    std::vector<ProjectRecord> keep;

    for (const auto& r : cur.records)
        if (r.quality == Quality::A || r.quality == Quality::B) keep.push_back(r);
    {
        auto step = fmt::format("data quality A/B: {}", keep.size());
        cur = cur.derive(std::move(keep), std::move(step));
    }

    keep.clear();
    for (const auto& r : cur.records)
        if (r.dev_type == DevType::New) keep.push_back(r);
    {
        auto step = fmt::format("new development only: {}", keep.size());
        cur = cur.derive(std::move(keep), std::move(step));
    }

    keep.clear();
    for (const auto& r : cur.records)
        if (r.complete()) keep.push_back(r);
    {
        auto step = fmt::format("complete records: {}", keep.size());
        cur = cur.derive(std::move(keep), std::move(step));
    }
    if (cur.empty()) cur.provenance.push_back("warning: no records survived filtering");
    return cur;
}

const ProjectSet& ProductivityBands::band(int index) const {
    switch (index) {
        case 1: return d1;
        case 2: return d2;
        case 3: return d3;
        case 4: return d4;
    }
    throw DataError(fmt::format("no productivity band {}", index));
}

ProductivityBands partition_by_productivity(const ProjectSet& ps) {
    std::vector<ProjectRecord> b1, b2, b3, all;
    std::size_t excluded = 0;
    for (const auto& r : ps.records) {
        const double p = r.productivity();
        if (p < kBandEdges[0]) {
            ++excluded;
            continue;
        }
        (p < kBandEdges[1] ? b1 : p < kBandEdges[2] ? b2 : b3).push_back(r);
        all.push_back(r);
    }
    ProductivityBands out;
    out.excluded = excluded;
    {
        auto step = fmt::format("band D1 0.2 <= P < 10: {}", b1.size());
        out.d1 = ps.derive(std::move(b1), std::move(step));
    }
    {
        auto step = fmt::format("band D2 10 <= P < 20: {}", b2.size());
        out.d2 = ps.derive(std::move(b2), std::move(step));
    }
    {
        auto step = fmt::format("band D3 P >= 20: {}", b3.size());
        out.d3 = ps.derive(std::move(b3), std::move(step));
    }
    {
        auto step = fmt::format("band D4 union: {} ({} excluded with P < 0.2)", all.size(), excluded);
        out.d4 = ps.derive(std::move(all), std::move(step));
    }
    return out;
}

std::size_t train_count(std::size_t n, double ratio) {
    // The epsilon keeps exact halves (0.7 * 245 = 171.5) from rounding down
    // through representation error.
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5 + 1e-9));
}

Split split_train_test(const ProjectSet& ps, double ratio, std::uint64_t seed) {
    const std::size_t n = ps.size();
    if (n < 2) throw DataError(fmt::format("cannot split {} record(s)", n));
    if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError(fmt::format("split ratio {} not in (0, 1)", ratio));
    const std::size_t k = std::min(train_count(n, ratio), n - 1);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    std::vector<ProjectRecord> train, test;
    for (auto i : train_idx) train.push_back(ps.records[i]);
    for (auto i : test_idx) test.push_back(ps.records[i]);
    Split s;
    s.train = ps.derive(std::move(train), fmt::format("train split ratio={} seed={}: {}", ratio, seed, k));
    s.test = ps.derive(std::move(test), fmt::format("test split ratio={} seed={}: {}", ratio, seed, n - k));
    return s;
}

double quantile_linear(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DataError("quantile of empty sequence");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<bool> iqr_inliers(std::span<const double> values, OutlierReport* report) {
    if (values.size() < 4) throw DataError(fmt::format("IQR outlier rule needs n >= 4, got {}", values.size()));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    OutlierReport rep;
    rep.q1 = quantile_linear(sorted, 0.25);
    rep.q3 = quantile_linear(sorted, 0.75);
    rep.iqr = rep.q3 - rep.q1;
    rep.lower = rep.q1 - 1.5 * rep.iqr;
    rep.upper = rep.q3 + 1.5 * rep.iqr;
    std::vector<bool> keep(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) keep[i] = values[i] >= rep.lower && values[i] <= rep.upper;
    if (report) *report = rep;
    return keep;
}

OutlierResult remove_outliers_iqr(const ProjectSet& ps) {
    OutlierResult out;
    const auto keep = iqr_inliers(ps.efforts(), &out.report);
    std::vector<ProjectRecord> kept;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (keep[i])
            kept.push_back(ps.records[i]);
        else
            out.report.removed_ids.push_back(ps.records[i].id);
    }
    out.kept = ps.derive(std::move(kept), fmt::format("IQR outlier removal on effort [{:.6g}, {:.6g}]: removed {}",
                                                      out.report.lower, out.report.upper,
                                                      out.report.removed_ids.size()));
    return out;
}

SummaryStats summarize(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw DataError(fmt::format("summary statistics need n >= 2, got {}", n));
    SummaryStats s;
    s.n = n;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sorted) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double nn = static_cast<double>(n);
    s.stdev = std::sqrt(m2 / (nn - 1.0));
    m2 /= nn;
    m3 /= nn;
    m4 /= nn;
    if (m2 > 0.0) {
        if (n >= 3) s.skewness = m3 / std::pow(m2, 1.5) * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
        if (n >= 4) {
            const double g2 = m4 / (m2 * m2) - 3.0;
            s.kurtosis = ((nn + 1.0) * g2 + 6.0) * (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));
        }
    }
    return s;
}

SummaryStats summarize(const ProjectSet& ps) { return summarize(ps.efforts()); }

// ---------------------------------------------------------------------------
// Synthetic data

std::array<std::size_t, 3> band_counts(const SynthSpec& spec) {
    const double total = spec.band_fractions[0] + spec.band_fractions[1] + spec.band_fractions[2];
    if (!(std::fabs(total - 1.0) < 1e-9))
        throw ConfigError(fmt::format("band fractions sum to {}, expected 1", total));
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (int b = 0; b < 3; ++b) {
        if (spec.band_fractions[b] < 0.0) throw ConfigError("negative band fraction");
        const double exact = spec.band_fractions[b] * static_cast<double>(spec.n);
        counts[b] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        rem[b] = exact - static_cast<double>(counts[b]);
        assigned += counts[b];
    }
    while (assigned < spec.n) {
        const auto b = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
        ++counts[b];
        rem[b] = -1.0;
        ++assigned;
    }
    return counts;
}

ProjectSet synth_generate(const SynthSpec& spec) {
    if (spec.n == 0) throw ConfigError("synthetic set needs n >= 1");
    if (!(spec.band3_max > kBandEdges[2])) throw ConfigError("band3_max must exceed 20");
    if (!(spec.team_mean >= 1.0)) throw ConfigError("team_mean must be >= 1");
    if (!(spec.noise >= 0.0)) throw ConfigError("noise must be >= 0");
    const auto counts = band_counts(spec);

    Rng rng(spec.seed);
    std::vector<int> bands;
    for (int b = 0; b < 3; ++b) bands.insert(bands.end(), counts[b], b);
    rng.shuffle(bands.begin(), bands.end());

    const std::array<double, 4> edges{kBandEdges[0], kBandEdges[1], kBandEdges[2], spec.band3_max};
    const double q = 1.0 / spec.team_mean;
    double rp_total = 0.0;
    for (double p : spec.resource_probs) rp_total += p;

    ProjectSet ps;
    for (std::size_t i = 0; i < spec.n; ++i) {
        ProjectRecord r;
        r.id = fmt::format("S{:04d}", i + 1);
        r.afp = std::max(1.0, std::round(std::exp(rng.normal(spec.afp_log_mean, spec.afp_log_sd))));
        // 1 + Geometric(q) failures has mean 1/q.
        double u;
        do {
            u = rng.uniform();
        } while (u <= 0.0);
        r.team_size = q >= 1.0 ? 1.0 : 1.0 + std::floor(std::log(u) / std::log(1.0 - q));
        double pick = rng.uniform() * rp_total;
        r.resource_level = 4;
        for (int lvl = 0; lvl < 4; ++lvl) {
            if (pick < spec.resource_probs[lvl]) {
                r.resource_level = lvl + 1;
                break;
            }
            pick -= spec.resource_probs[lvl];
        }
        r.dev_type = DevType::New;
        r.quality = rng.uniform() < 0.7 ? Quality::A : Quality::B;
        const int b = bands[i];
        for (;;) {
            const double p = rng.uniform(edges[b], edges[b + 1]);
            double factor = 1.0;
            if (spec.noise > 0.0) factor = std::max(0.05, 1.0 + spec.noise * rng.normal());
            r.effort = p * r.afp * factor;
            const double back = r.productivity();
            if (spec.noise > 0.0 || (back >= edges[b] && back < edges[b + 1])) break;
        }
        ps.records.push_back(std::move(r));
    }
    ps.provenance.push_back(fmt::format("synthetic n={} bands={}/{}/{} noise={} seed={}", spec.n, counts[0], counts[1],
                                        counts[2], spec.noise, spec.seed));
    return ps;
}

SynthSpec parse_synth_spec(std::string_view text, std::uint64_t default_seed) {
    SynthSpec spec;
    spec.seed = default_seed;
    for (auto item : split_fields(text, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError(fmt::format("synth spec item '{}' lacks '='", item));
        const auto key = lower(trim(item.substr(0, eq)));
        const auto val = trim(item.substr(eq + 1));
        auto num = [&] {
            double v;
            if (!parse_double(val, v)) throw ConfigError(fmt::format("synth spec: bad value for {}", key));
            return v;
        };
        if (key == "n") {
            spec.n = static_cast<std::size_t>(num());
        } else if (key == "bands") {
            const auto parts = split_fields(val, ':');
            if (parts.size() != 3) throw ConfigError("synth spec: bands needs three ':'-separated weights");
            std::array<double, 3> w{};
            double total = 0.0;
            for (int b = 0; b < 3; ++b) {
                if (!parse_double(parts[b], w[b]) || w[b] < 0.0) throw ConfigError("synth spec: bad band weight");
                total += w[b];
            }
            if (!(total > 0.0)) throw ConfigError("synth spec: band weights sum to zero");
            for (int b = 0; b < 3; ++b) spec.band_fractions[b] = w[b] / total;
        } else if (key == "noise") {
            spec.noise = num();
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(num());
        } else if (key == "afp_log_mean") {
            spec.afp_log_mean = num();
        } else if (key == "afp_log_sd") {
            spec.afp_log_sd = num();
        } else if (key == "team_mean") {
            spec.team_mean = num();
        } else if (key == "band3_max") {
            spec.band3_max = num();
        } else {
            throw ConfigError(fmt::format("synth spec: unknown key '{}'", key));
        }
    }
    return spec;
}

}  // namespace rfuzzy::data
