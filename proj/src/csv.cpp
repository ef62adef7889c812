#include "wordscores/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "wordscores/error.hpp"

namespace wordscores {

UnscorableDocumentError::UnscorableDocumentError(std::vector<std::string> ids)
    : Error([&] {
        std::string msg = "unscorable document(s), no word overlap with the word-score table:";
        for (const auto& id : ids) msg += " " + id;
        return msg;
      }()),
      ids_(std::move(ids)) {}

namespace csv {

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::column(std::string_view name, std::string_view context) const {
  if (auto idx = find_column(name)) return *idx;
  throw LoadError(std::string(context) + ": missing column '" + std::string(name) + "'");
}

Table parse(std::string_view text, std::string_view context) {
  Table table;
  std::vector<Row> records;
  Row current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool line_is_comment = false;
  bool at_line_start = true;

  auto finish_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto finish_record = [&] {
    if (line_is_comment) {
      current.clear();
    } else if (!(current.empty() && !field_started && field.empty())) {
      finish_field();
      records.push_back(std::move(current));
      current.clear();
    }
    line_is_comment = false;
    at_line_start = true;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (at_line_start) {
      at_line_start = false;
      if (c == '#') line_is_comment = true;
    }
    if (line_is_comment) {
      if (c == '\n') finish_record();
      continue;
    }
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        finish_field();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        finish_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw LoadError(std::string(context) + ": unterminated quoted field");
  finish_record();

  if (records.empty()) throw LoadError(std::string(context) + ": empty CSV (no header)");
  table.header = std::move(records.front());
  if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0)
    table.header[0].erase(0, 3);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw LoadError(std::string(context) + ": row " + std::to_string(r) + " has " +
                      std::to_string(records[r].size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

Table read_file(const std::filesystem::path& path) {
  return parse(read_text_file(path), path.string());
}

void require_header(const Table& table, const std::vector<std::string>& expected,
                    std::string_view context) {
  bool ok = table.header.size() >= expected.size();
  for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = table.header[i] == expected[i];
  if (!ok) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw LoadError(std::string(context) + ": expected header '" + want + "'");
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << escape(row[i]);
  }
  out << '\n';
}

std::string format6(double value) {
  if (std::isnan(value)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

std::string format_exact(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::optional<double> parse_optional_double(std::string_view field) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (field.empty() || field == "NA" || field == "na" || field == ".") return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw LoadError("not a number: '" + std::string(field) + "'");
  return value;
}

double parse_double(std::string_view field, std::string_view context) {
  std::optional<double> v;
  try {
    v = parse_optional_double(field);
  } catch (const LoadError&) {
    v.reset();
  }
  if (!v) throw LoadError(std::string(context) + ": expected a number, got '" + std::string(field) + "'");
  return *v;
}

long long parse_int(std::string_view field, std::string_view context) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw LoadError(std::string(context) + ": expected an integer, got '" + std::string(field) + "'");
  return value;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace csv
}  // namespace wordscores
