#pragma once

// Slow, direct implementations used as test oracles. They work on a dense
// L x T x B boolean array and loop over every index, sharing no code with the
// library beyond the tensor's entry list.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driveby/occupancy.hpp"
#include "driveby/rng.hpp"

namespace oracle {

struct Dense {
  int L, T, B;
  std::vector<char> y;  // (l * T + t) * B + b
  explicit Dense(const driveby::OccupancyTensor& tensor)
      : L(tensor.L()), T(tensor.T()), B(tensor.B()), y(static_cast<std::size_t>(L) * T * B, 0) {
    for (const auto& c : tensor.entries()) y[(static_cast<std::size_t>(c.l) * T + c.t) * B + c.b] = 1;
  }
  bool at(int l, int t, int b) const { return y[(static_cast<std::size_t>(l) * T + t) * B + b] != 0; }
};

inline std::vector<std::vector<char>> theta(const Dense& d, const std::vector<int>& subset) {
  std::vector<std::vector<char>> out(d.L, std::vector<char>(d.T, 0));
  for (int l = 0; l < d.L; ++l)
    for (int t = 0; t < d.T; ++t)
      for (int b : subset)
        if (d.at(l, t, b)) out[l][t] = 1;
  return out;
}

inline double pc(const Dense& d, const std::vector<int>& subset) {
  const auto th = theta(d, subset);
  int n = 0;
  for (const auto& row : th)
    for (char c : row) n += c;
  return 100.0 * n / (d.L * d.T);
}

inline double psc(const Dense& d, const std::vector<int>& subset) {
  const auto th = theta(d, subset);
  int n = 0;
  for (const auto& row : th) n += std::any_of(row.begin(), row.end(), [](char c) { return c != 0; });
  return 100.0 * n / d.L;
}

// Facility value of demand point (l, t): best S[l][m] * rho^(t - j) over
// sampled (m, j) with j <= t. rho = 0 keeps only j = t.
inline double flst(const Dense& d, const std::vector<int>& subset, const Eigen::MatrixXd& S, double rho) {
  const auto th = theta(d, subset);
  double total = 0.0;
  for (int l = 0; l < d.L; ++l) {
    for (int t = 0; t < d.T; ++t) {
      double best = 0.0;
      for (int j = 0; j <= t; ++j) {
        const double w = std::pow(rho, t - j);
        for (int m = 0; m < d.L; ++m)
          if (th[m][j]) best = std::max(best, S(l, m) * w);
      }
      total += best;
    }
  }
  return total / (d.L * d.T);
}

inline double fls(const Dense& d, const std::vector<int>& subset, const Eigen::MatrixXd& S) {
  return flst(d, subset, S, 0.0);
}

inline driveby::OccupancyTensor random_tensor(int L, int T, int B, double density, std::uint64_t seed) {
  driveby::Rng rng(seed, 100);
  std::vector<driveby::Cell> cells;
  for (int l = 0; l < L; ++l)
    for (int t = 0; t < T; ++t)
      for (int b = 0; b < B; ++b)
        if (rng.uniform() < density) cells.push_back({l, t, b});
  return driveby::OccupancyTensor(L, T, B, std::move(cells));
}

// Symmetric matrix with unit diagonal and off-diagonal entries in [0, 1).
inline Eigen::MatrixXd random_similarity(int L, std::uint64_t seed) {
  driveby::Rng rng(seed, 101);
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = i + 1; j < L; ++j) S(i, j) = S(j, i) = rng.uniform();
  return S;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("driveby_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
