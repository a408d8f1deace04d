#pragma once

#include "kdlab/harness/csv.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace kdlab::harness {

inline constexpr const char* kVersion = "0.1.0";

/// Outcome of one recipe run: named CSV tables plus scalar summaries.
struct RunReport {
    std::string recipe;
    std::string config_digest;
    std::string version = kVersion;
    std::vector<std::pair<std::string, CsvTable>> tables;  // file stem -> table, in emission order
    std::vector<std::pair<std::string, double>> summary;

    const CsvTable& table(const std::string& name) const;
    double value(const std::string& key) const;
};

/// JSON text; non-finite numbers appear as the strings "+inf", "-inf", "nan".
std::string report_json(const RunReport& report);

/// Writes every table as <stem>.csv and the summary as report.json.
void write_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace kdlab::harness
