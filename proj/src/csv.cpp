#include "driveby/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "driveby/errors.hpp"

namespace driveby::csv {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(trim(current));
  return fields;
}

Table Table::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

Table Table::parse(std::string_view text, std::string source_name) {
  Table t;
  t.source_ = std::move(source_name);
  // Strip a UTF-8 byte order mark, common in GTFS exports.
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) {
      if (nl == text.size()) break;
      continue;
    }
    auto fields = split_record(line);
    if (!have_header) {
      t.header_ = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != t.header_.size()) {
        throw DataError(t.source_ + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(t.header_.size()) + " fields, found " +
                        std::to_string(fields.size()));
      }
      t.rows_.push_back(std::move(fields));
      t.lines_.push_back(line_no);
    }
    if (nl == text.size()) break;
  }
  if (!have_header) throw SchemaError(t.source_ + ": missing header row");
  return t;
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw SchemaError(source_ + ": missing required column '" + std::string(name) + "'");
}

double parse_double(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  double value = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw DataError("cannot parse " + std::string(what) + " as a number: '" + t + "'");
  }
  return value;
}

long long parse_int(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  long long value = 0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw DataError("cannot parse " + std::string(what) + " as an integer: '" + t + "'");
  }
  return value;
}

}  // namespace driveby::csv
