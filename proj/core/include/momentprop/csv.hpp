#pragma once

#include <string>
#include <vector>

namespace momentprop {

/// Minimal CSV document: '#' comment lines, one header row, data rows.
/// Fields never contain commas in the formats this library writes.
struct CsvDocument {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws SpecError when absent
  bool has_column(const std::string& name) const;
  std::string to_string() const;
};

CsvDocument parse_csv(const std::string& text);
CsvDocument read_csv(const std::string& path);

/// Shortest round-trippable rendering of a double.
std::string format_double(double v);
double parse_double(const std::string& s);

/// Writes to a temporary sibling file, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace momentprop
