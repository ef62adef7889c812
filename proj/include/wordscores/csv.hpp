#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wordscores::csv {

using Row = std::vector<std::string>;

/// Parsed CSV file: a header row plus data rows. Quoted fields may contain
/// commas, doubled quotes and newlines. Blank lines and lines starting with
/// '#' (outside quotes) are skipped.
struct Table {
  Row header;
  std::vector<Row> rows;

  /// Column index by name; throws LoadError naming `context` if absent.
  std::size_t column(std::string_view name, std::string_view context = {}) const;
  std::optional<std::size_t> find_column(std::string_view name) const;
};

Table parse(std::string_view text, std::string_view context = "<csv>");
Table read_file(const std::filesystem::path& path);

/// Throws LoadError unless the header starts with exactly `expected`.
void require_header(const Table& table, const std::vector<std::string>& expected,
                    std::string_view context);

std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

/// 6 significant digits, the precision used by the per-cell reports.
std::string format6(double value);
/// Shortest representation that parses back to the identical double.
std::string format_exact(double value);

/// Parses a decimal-point float; empty or "NA" yields nullopt.
std::optional<double> parse_optional_double(std::string_view field);
double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace wordscores::csv
