#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kdlab::harness {

using CsvCell = std::variant<std::string, double, std::int64_t>;

/// In-memory CSV table. Doubles are written as shortest round-trip decimals
/// ("inf", "-inf" and "nan" for non-finite values).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    CsvTable() = default;
    explicit CsvTable(std::vector<std::string> columns) : header(std::move(columns)) {}

    /// Throws DimensionMismatch if the row width differs from the header.
    void add_row(const std::vector<CsvCell>& cells);

    /// Column index by name; throws FormatError if absent.
    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::string_view name) const;

    bool operator==(const CsvTable&) const = default;
};

std::string format_cell(const CsvCell& cell);

/// RFC-4180 text with '\n' line endings.
std::string to_csv_text(const CsvTable& table);

/// Parses RFC-4180 text (first record is the header). Throws FormatError.
CsvTable parse_csv(std::string_view text);

/// Writes atomically through a temporary file and rename. Throws IoError.
void emit_csv(const CsvTable& table, const std::filesystem::path& path);
void write_text_atomic(const std::string& text, const std::filesystem::path& path);

CsvTable read_csv_file(const std::filesystem::path& path);

}  // namespace kdlab::harness
