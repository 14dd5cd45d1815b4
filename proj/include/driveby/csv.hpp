#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace driveby::csv {

// Splits one comma-separated record. Double-quoted fields may contain commas
// and "" escapes; surrounding whitespace and a trailing '\r' are stripped.
std::vector<std::string> split_record(std::string_view line);

std::string trim(std::string_view s);

// Quotes a field when it holds a comma, quote or newline.
std::string quote(std::string_view field);

// A comma-separated table with a header row, read fully into memory.
class Table {
 public:
  static Table read(const std::filesystem::path& path);
  static Table parse(std::string_view text, std::string source_name);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
  // 1-based line number of row i in the source, for error messages.
  std::size_t line_of(std::size_t i) const { return lines_[i]; }
  const std::string& source() const { return source_; }

  std::optional<std::size_t> find_column(std::string_view name) const;
  // Throws SchemaError naming the column and the source when absent.
  std::size_t require_column(std::string_view name) const;

 private:
  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

}  // namespace driveby::csv
