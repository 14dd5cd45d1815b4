#include "driveby/grid_io.hpp"

#include <fstream>
#include <vector>

#include "driveby/csv.hpp"
#include "driveby/errors.hpp"

namespace driveby {

void write_grid(std::ostream& out, const Eigen::MatrixXd& m) {
  if (m.rows() == m.cols()) {
    out << m.rows() << '\n';
  } else {
    out << m.rows() << ',' << m.cols() << '\n';
  }
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

void write_grid(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write grid file: " + path.string());
  write_grid(out, m);
}

Eigen::MatrixXd read_grid(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty grid file");
  const auto dims = csv::split_record(line);
  if (dims.empty() || dims.size() > 2) throw DataError(source + ":1: expected 'L' or 'rows,cols' header");
  const auto rows = csv::parse_int(dims[0], "row count");
  const auto cols = dims.size() == 2 ? csv::parse_int(dims[1], "column count") : rows;
  if (rows < 1 || cols < 1) throw DataError(source + ":1: grid dimensions must be positive");

  Eigen::MatrixXd m(rows, cols);
  long long r = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    if (r >= rows) throw DataError(source + ":" + std::to_string(line_no) + ": more rows than declared");
    const auto fields = csv::split_record(line);
    if (static_cast<long long>(fields.size()) != cols) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                      " values, found " + std::to_string(fields.size()));
    }
    for (long long c = 0; c < cols; ++c) {
      try {
        m(r, c) = csv::parse_double(fields[c], "grid value");
      } catch (const DataError& e) {
        throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    ++r;
  }
  if (r != rows) {
    throw DataError(source + ": declared " + std::to_string(rows) + " rows, found " + std::to_string(r));
  }
  return m;
}

Eigen::MatrixXd read_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file: " + path.string());
  return read_grid(in, path.string());
}

}  // namespace driveby
