#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace driveby {

// Comma-separated numeric grid. The first line holds the dimensions: a single
// value "L" for a square matrix, "rows,cols" otherwise. Values are printed with
// 17 significant digits so a write/read cycle is lossless.
void write_grid(std::ostream& out, const Eigen::MatrixXd& m);
void write_grid(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_grid(std::istream& in, const std::string& source = "<stream>");
Eigen::MatrixXd read_grid(const std::filesystem::path& path);

}  // namespace driveby
