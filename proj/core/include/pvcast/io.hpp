#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pvcast::io {

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

/// Comma-separated, header row mandatory, no quoting. Blank lines and
/// surrounding whitespace in cells are ignored; ragged rows are an error.
CsvDocument read_csv(std::istream& in, const std::string& source_name = "<stream>");
CsvDocument read_csv_file(const std::filesystem::path& path);

/// Strict decimal parse of the full cell; rejects trailing junk, nan and inf.
std::optional<double> parse_number(std::string_view text);

/// Shortest representation that round-trips exactly.
std::string format_number(double value);

std::vector<std::string> split(std::string_view text, char sep);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace pvcast::io
