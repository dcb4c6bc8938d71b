#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace timberflow {

// Comma-separated table with a header row. Blank lines and lines starting
// with '#' are skipped; fields are trimmed and may be double-quoted.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based line of each row in `source`

  std::optional<int> find_column(std::string_view name) const;
  int column(std::string_view name) const;  // InputError when absent
  std::string where(std::size_t row) const;  // "file:line"
};

std::vector<std::string> split_csv_line(std::string_view line);
CsvTable parse_csv(std::string_view text, std::string source);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::int64_t parse_int(std::string_view field, const std::string& where);
double parse_double(std::string_view field, const std::string& where);

// Fixed-point rendering used by every text output so files are byte-stable.
std::string format_fixed(double value, int decimals);
// Integer thousandths as "123.456".
std::string format_milli(std::int64_t milli);

}  // namespace timberflow
