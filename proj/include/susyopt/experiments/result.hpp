#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "susyopt/experiments/config.hpp"

namespace susyopt::experiments {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Closed interval [lower, upper]; (-inf, inf) marks a report-only metric.
struct Range {
    double lower = -inf;
    double upper = inf;

    bool contains(double v) const { return v >= lower && v <= upper; }
    bool informational() const { return lower == -inf && upper == inf; }
};

struct Metric {
    std::string name;
    double value;
    Range gate;
    bool pass;
};

/// Column-oriented table; one CSV file per table.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> notes;  // written as '#' comment lines
};

/// A non-CSV artifact such as an optical layout sheet.
struct Attachment {
    std::string filename;
    std::string content;
};

struct Provenance {
    std::string config_hash;
    std::string tool_version = experiments::tool_version;
    std::vector<std::string> defaulted_keys;
};

struct ScenarioResult {
    std::string scenario;
    std::vector<Metric> metrics;
    std::vector<Table> tables;
    std::vector<Attachment> attachments;
    std::vector<std::string> warnings;
    Provenance provenance;

    const Metric& add_metric(std::string name, double value, Range gate = {}) {
        metrics.push_back({std::move(name), value, gate, !std::isnan(value) && gate.contains(value)});
        return metrics.back();
    }

    const Metric* metric(const std::string& name) const {
        for (const auto& m : metrics) {
            if (m.name == name) return &m;
        }
        return nullptr;
    }

    bool gates_pass() const {
        return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
    }
};

inline Provenance provenance_for(const ExperimentConfig& cfg) {
    return {config_hash(cfg), tool_version, cfg.defaulted_keys};
}

namespace detail {

inline std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

inline void write_header(std::ostream& os, const ScenarioResult& r) {
    os << "# scenario: " << r.scenario << '\n';
    os << "# config_hash: " << r.provenance.config_hash << '\n';
    os << "# tool_version: " << r.provenance.tool_version << '\n';
    os << "# defaulted_keys:";
    for (const auto& k : r.provenance.defaulted_keys) os << ' ' << k;
    os << '\n';
}

}  // namespace detail

/**
 * Writes <scenario>_<table>.csv for every table, <scenario>_metrics.csv and the
 * attachments into dir. Each CSV starts with '#' provenance lines followed by a
 * header row. Numbers use the shortest round-trip form and do not depend on
 * the locale. Returns the written paths.
 */
inline std::vector<std::filesystem::path> emit_csv(const ScenarioResult& r,
                                                   const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());

    std::vector<fs::path> written;
    auto open = [&](const std::string& name) {
        const auto path = dir / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw ConfigError("cannot write '" + path.string() + "'");
        written.push_back(path);
        return os;
    };

    {
        auto os = open(r.scenario + "_metrics.csv");
        detail::write_header(os, r);
        for (const auto& w : r.warnings) os << "# warning: " << w << '\n';
        os << "metric,value,lower,upper,pass\n";
        for (const auto& m : r.metrics) {
            os << m.name << ',' << detail::csv_number(m.value) << ',' << detail::csv_number(m.gate.lower)
               << ',' << detail::csv_number(m.gate.upper) << ',' << (m.pass ? 1 : 0) << '\n';
        }
    }
    for (const auto& t : r.tables) {
        auto os = open(r.scenario + "_" + t.name + ".csv");
        detail::write_header(os, r);
        for (const auto& n : t.notes) os << "# " << n << '\n';
        for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
        os << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << detail::csv_number(row[c]);
            os << '\n';
        }
    }
    for (const auto& a : r.attachments) {
        auto os = open(a.filename);
        os << a.content;
    }
    return written;
}

}  // namespace susyopt::experiments
