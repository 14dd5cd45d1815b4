#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "driveby/occupancy.hpp"

namespace driveby {

// L x L great-circle distances in meters.
using DistanceMatrix = Eigen::MatrixXd;
// Symmetric, unit diagonal, entries in [0, 1].
using SimilarityMatrix = Eigen::MatrixXd;

DistanceMatrix distance_matrix(const LocationSet& locations);
DistanceMatrix distance_matrix(std::span<const Stop> points);

// S = 1 - D / max(D). Throws DegenerateInputError when max(D) == 0.
SimilarityMatrix normalized_similarity(const DistanceMatrix& distances);

// G = exp(-rate * d) with d converted to kilometers; rate is per kilometer.
SimilarityMatrix exponential_similarity(const DistanceMatrix& distances, double rate_per_km);

// Rate fitted on the Delhi static-monitor network.
inline constexpr double kDelhiLambdaPerKm = 0.07676;

// Static-monitor readings: one row per station, one column per timestamp.
// Missing readings are NaN.
struct StationReadings {
  Eigen::MatrixXd values;
  std::vector<Stop> stations;  // coordinates, one per row of `values`
};

StationReadings read_station_readings(const std::filesystem::path& grid_file,
                                      const std::filesystem::path& coordinates_file);

// Least-squares fit of ln(corr_ij) = -rate * d_ij (km) through the origin over
// all station pairs; correlations are clamped to [1e-6, 1]. Result is >= 0.
double fit_lambda(const StationReadings& readings);

// H[t, t'] = Pearson correlation across stations between columns t and t',
// clamped to [0, 1]. Constant columns get zero off-diagonal entries.
Eigen::MatrixXd temporal_similarity_from_data(const Eigen::MatrixXd& readings);

// rho^(t - j) for t >= j, else 0.
double causal_kernel(double rho, int t, int j);

// Symmetric, unit diagonal, [0, 1] entries; used to validate inputs.
bool is_similarity_matrix(const Eigen::MatrixXd& m, double tol = 1e-12);

}  // namespace driveby
