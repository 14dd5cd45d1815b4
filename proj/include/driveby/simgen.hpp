#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>

namespace driveby {

// Eigenvectors of a symmetric similarity matrix ordered by eigenvalue,
// largest first, so the leading columns are the smoothest graph signals.
struct SpectralBasis {
  Eigen::MatrixXd vectors;   // L x L, orthonormal columns
  Eigen::VectorXd values;    // descending

  // First m columns.
  Eigen::MatrixXd leading(int m) const { return vectors.leftCols(m); }
};

SpectralBasis spectral_basis(const Eigen::MatrixXd& similarity);

struct SimulationProvenance {
  std::string generator;  // "factored" or "ar"
  std::uint64_t seed = 0;
  int spatial_bandwidth = 0;   // m
  int temporal_bandwidth = 0;  // n (factored only)
  int rank = 0;                // r
  double coefficient_std = 0.5;
  double noise_std = 0.0;
  double ar_coefficient = 0.0;  // c (ar only)
};

struct SpatioTemporalMatrix {
  Eigen::MatrixXd values;  // L x T
  SimulationProvenance provenance;
};

inline constexpr double kCoefficientStd = 0.5;
inline constexpr double kDefaultNoiseStd = 0.001;

// Y = A B^T + N with columns of A drawn from the first m eigenvectors of G,
// columns of B from the first n eigenvectors of H, coefficients ~ N(0, 0.5^2)
// and noise ~ N(0, noise_std^2). Each draw family has its own RNG stream.
SpatioTemporalMatrix simulate_factored(const Eigen::MatrixXd& spatial_similarity,
                                       const Eigen::MatrixXd& temporal_similarity, int m, int n,
                                       int r, double noise_std, std::uint64_t seed);

// y_t = z_t + n_t, z_t = c z_{t-1} + a_t with z_0 = 0 and a_t = U_m a_hat_t.
// `r` is carried in the provenance only.
SpatioTemporalMatrix simulate_ar(const Eigen::MatrixXd& spatial_similarity, int m, int r,
                                 double c, int T, double noise_std, std::uint64_t seed);

void write_provenance(const SimulationProvenance& p, const std::filesystem::path& path);
SimulationProvenance read_provenance(const std::filesystem::path& path);
std::string provenance_to_json(const SimulationProvenance& p);

}  // namespace driveby
