#include "momentprop/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "momentprop/errors.hpp"

namespace momentprop {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t p = 0;
  for (;;) {
    const auto comma = line.find(',', p);
    std::string f = line.substr(p, comma == std::string::npos ? std::string::npos : comma - p);
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : f.substr(b, e - b + 1));
    if (comma == std::string::npos) break;
    p = comma + 1;
  }
  return out;
}

}  // namespace

std::size_t CsvDocument::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SpecError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvDocument::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

std::string CsvDocument::to_string() const {
  std::ostringstream os;
  for (const auto& c : comments) os << '#' << c << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
  return os.str();
}

CsvDocument parse_csv(const std::string& text) {
  CsvDocument doc;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      doc.comments.push_back(line.substr(1));
      continue;
    }
    auto fields = split_fields(line);
    if (doc.header.empty()) {
      doc.header = std::move(fields);
    } else {
      if (fields.size() != doc.header.size()) {
        throw SpecError("row has " + std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(doc.header.size()),
                        lineno, 1);
      }
      doc.rows.push_back(std::move(fields));
    }
  }
  if (doc.header.empty()) throw SpecError("CSV has no header row");
  return doc;
}

CsvDocument read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw SpecError("not a number: '" + s + "'");
  return v;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SpecError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw SpecError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw SpecError("cannot move output into place at '" + path + "': " + ec.message());
  }
}

}  // namespace momentprop
