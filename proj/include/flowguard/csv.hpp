#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowguard {

/// A delimited text table: one header row plus data rows of string cells.
struct Table {
    char delimiter = ',';
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by header name, if present.
    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
    /// Column position by header name; throws SchemaError naming the column.
    [[nodiscard]] std::size_t require_column(std::string_view name) const;
};

/// Comma or semicolon, whichever occurs more often in the first line.
[[nodiscard]] char detect_delimiter(std::string_view first_line);

/// Parses delimited UTF-8 text. Handles double-quoted cells, CRLF line endings,
/// a leading BOM and blank lines. Throws EmptyTableError when there is no header.
[[nodiscard]] Table parse_table(std::string_view text);

/// Parses a decimal number; accepts a decimal comma when `decimal_comma` is set.
[[nodiscard]] std::optional<double> parse_number(std::string_view cell, bool decimal_comma = false);

/// Shortest text that round-trips to the same double.
[[nodiscard]] std::string format_number(double value);

/// Quotes a cell if it contains the delimiter, a quote or a newline.
[[nodiscard]] std::string escape_cell(std::string_view cell, char delimiter = ',');

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file then renames it over `path`, so readers
/// never observe a truncated artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace flowguard
