#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "market_data.hpp"

namespace ssrd {

/// Column of a report table with its display precision.
struct Column {
    std::string name;
    int precision;
};

/// Generic tabular report with parameter, timing and configuration blocks.
struct Report {
    std::string command;
    std::vector<Column> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, double>> parameters;
    std::vector<std::pair<std::string, double>> scalars;
    std::vector<std::pair<std::string, std::string>> labels;
    std::vector<std::pair<std::string, double>> timings;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::string> warnings;
    bool include_timings = true;
};

/// Relative error |model - market| / market in percent.
inline double relative_error_pct(double model, double market) { return std::abs(model - market) / market * 100.0; }

/// Per-tenor spread comparison in the layout of the calibration tables.
inline Report calibration_report(const std::string& command, const std::vector<double>& tenors,
                                 const std::vector<double>& market_bps, const std::vector<double>& model_bps) {
    Report r;
    r.command = command;
    r.columns = {{"tenor", 2}, {"market_bps", 3}, {"model_bps", 3}, {"rel_error_pct", 5}};
    for (std::size_t i = 0; i < tenors.size(); ++i)
        r.rows.push_back({tenors[i], market_bps[i], model_bps[i], relative_error_pct(model_bps[i], market_bps[i])});
    return r;
}

namespace detail {

inline std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

inline std::string general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

inline void print_table(std::ostream& os, const Report& r) {
    std::vector<std::size_t> width;
    for (const auto& c : r.columns) width.push_back(c.name.size());
    std::vector<std::vector<std::string>> cells;
    for (const auto& row : r.rows) {
        std::vector<std::string> line;
        for (std::size_t c = 0; c < r.columns.size(); ++c) {
            line.push_back(detail::fixed(row[c], r.columns[c].precision));
            width[c] = std::max(width[c], line.back().size());
        }
        cells.push_back(std::move(line));
    }
    os << "== " << r.command << " ==\n";
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
        os << (c ? "  " : "");
        os << std::string(width[c] - r.columns[c].name.size(), ' ') << r.columns[c].name;
    }
    if (!r.columns.empty()) os << '\n';
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) os << (c ? "  " : "") << std::string(width[c] - line[c].size(), ' ') << line[c];
        os << '\n';
    }
    for (const auto& [k, v] : r.parameters) os << "  " << k << " = " << detail::general(v) << '\n';
    for (const auto& [k, v] : r.scalars) os << "  " << k << " = " << detail::general(v) << '\n';
    for (const auto& [k, v] : r.labels) os << "  " << k << " = " << v << '\n';
    if (r.include_timings)
        for (const auto& [k, v] : r.timings) os << "  time[" << k << "] = " << detail::fixed(v, 3) << " s\n";
    for (const auto& w : r.warnings) os << "  warning: " << w << '\n';
}

inline nlohmann::ordered_json to_json(const Report& r) {
    nlohmann::ordered_json j;
    j["command"] = r.command;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        nlohmann::ordered_json o;
        for (std::size_t c = 0; c < r.columns.size(); ++c) o[r.columns[c].name] = row[c];
        rows.push_back(o);
    }
    j["rows"] = rows;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    j["parameters"] = params;
    for (const auto& [k, v] : r.scalars) j[k] = v;
    for (const auto& [k, v] : r.labels) j[k] = v;
    nlohmann::ordered_json timings = nlohmann::ordered_json::object();
    if (r.include_timings)
        for (const auto& [k, v] : r.timings) timings[k] = v;
    j["timings"] = timings;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.config) cfg[k] = v;
    j["config"] = cfg;
    j["warnings"] = r.warnings;
    return j;
}

inline void write_csv(const std::string& path, const Report& r) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    for (std::size_t c = 0; c < r.columns.size(); ++c) out << (c ? "," : "") << r.columns[c].name;
    out << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t c = 0; c < r.columns.size(); ++c) out << (c ? "," : "") << detail::fixed(row[c], r.columns[c].precision);
        out << '\n';
    }
}

inline void write_json(const std::string& path, const Report& r) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write file: " + path);
    out << to_json(r).dump(2) << '\n';
}

/// Every effective pricing setting, defaults included.
inline std::vector<std::pair<std::string, std::string>> echo_config(const PricingConfig& cfg) {
    return {
        {"recovery", detail::general(cfg.recovery)},
        {"frequency_months", std::to_string(cfg.frequency_months)},
        {"roll", to_string(cfg.roll)},
        {"roll_day", std::to_string(cfg.roll_day)},
        {"day_count", to_string(cfg.day_count)},
        {"valuation_date", format_date(cfg.valuation)},
        {"quad_nodes", std::to_string(cfg.quad_nodes)},
        {"order", std::to_string(cfg.order)},
        {"scheme", to_string(cfg.scheme)},
    };
}

}  // namespace ssrd
