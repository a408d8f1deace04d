#include "kdlab/harness/report.hpp"

#include "kdlab/error.hpp"

#include <json.hpp>

#include <cmath>

namespace kdlab::harness {

const CsvTable& RunReport::table(const std::string& name) const {
    for (const auto& [stem, t] : tables)
        if (stem == name) return t;
    throw Error("report has no table '" + name + "'");
}

double RunReport::value(const std::string& key) const {
    for (const auto& [k, v] : summary)
        if (k == key) return v;
    throw Error("report has no summary value '" + key + "'");
}

namespace {

nlohmann::ordered_json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
    return v;
}

}  // namespace

std::string report_json(const RunReport& report) {
    nlohmann::ordered_json j;
    j["recipe"] = report.recipe;
    j["config_digest"] = report.config_digest;
    j["version"] = report.version;
    nlohmann::ordered_json files = nlohmann::ordered_json::array();
    for (const auto& [stem, t] : report.tables) files.push_back(stem + ".csv");
    j["tables"] = files;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.summary) summary[k] = number(v);
    j["summary"] = summary;
    return j.dump(2) + "\n";
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
    for (const auto& [stem, t] : report.tables) emit_csv(t, dir / (stem + ".csv"));
    write_text_atomic(report_json(report), dir / "report.json");
}

}  // namespace kdlab::harness
