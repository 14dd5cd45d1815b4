#include "driveby/simgen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driveby/errors.hpp"
#include "driveby/rng.hpp"

namespace driveby {

SpectralBasis spectral_basis(const Eigen::MatrixXd& similarity) {
  if (similarity.rows() != similarity.cols() || similarity.rows() == 0) {
    throw ArgumentError("spectral basis needs a non-empty square matrix");
  }
  const double scale = std::max(1.0, similarity.cwiseAbs().maxCoeff());
  if ((similarity - similarity.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ArgumentError("spectral basis needs a symmetric matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(similarity);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  // Eigen returns ascending order.
  SpectralBasis basis;
  basis.values = solver.eigenvalues().reverse();
  basis.vectors = solver.eigenvectors().rowwise().reverse();
  return basis;
}

namespace {

Eigen::MatrixXd bandlimited_columns(const Eigen::MatrixXd& basis, int columns, Rng& rng) {
  Eigen::MatrixXd coefficients(basis.cols(), columns);
  for (Eigen::Index j = 0; j < coefficients.cols(); ++j) {
    for (Eigen::Index i = 0; i < coefficients.rows(); ++i) {
      coefficients(i, j) = rng.normal(0.0, kCoefficientStd);
    }
  }
  return basis * coefficients;
}

void add_noise(Eigen::MatrixXd& y, double noise_std, Rng& rng) {
  if (noise_std == 0.0) return;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, j) += rng.normal(0.0, noise_std);
  }
}

}  // namespace

SpatioTemporalMatrix simulate_factored(const Eigen::MatrixXd& spatial_similarity,
                                       const Eigen::MatrixXd& temporal_similarity, int m, int n,
                                       int r, double noise_std, std::uint64_t seed) {
  const auto L = spatial_similarity.rows();
  const auto T = temporal_similarity.rows();
  if (m < 1 || m > L) throw ArgumentError("spatial bandwidth m must lie in [1, L]");
  if (n < 1 || n > T) throw ArgumentError("temporal bandwidth n must lie in [1, T]");
  if (r < 1) throw ArgumentError("rank r must be at least 1");
  if (noise_std < 0) throw ArgumentError("noise standard deviation must be nonnegative");

  const auto spatial = spectral_basis(spatial_similarity).leading(m);
  const auto temporal = spectral_basis(temporal_similarity).leading(n);
  Rng a_rng(seed, streams::kSpatialCoefficients);
  Rng b_rng(seed, streams::kTemporalCoefficients);
  Rng noise_rng(seed, streams::kNoise);

  const Eigen::MatrixXd a = bandlimited_columns(spatial, r, a_rng);
  const Eigen::MatrixXd b = bandlimited_columns(temporal, r, b_rng);
  SpatioTemporalMatrix out;
  out.values = a * b.transpose();
  add_noise(out.values, noise_std, noise_rng);
  out.provenance = {"factored", seed, m, n, r, kCoefficientStd, noise_std, 0.0};
  return out;
}

SpatioTemporalMatrix simulate_ar(const Eigen::MatrixXd& spatial_similarity, int m, int r,
                                 double c, int T, double noise_std, std::uint64_t seed) {
  const auto L = spatial_similarity.rows();
  if (m < 1 || m > L) throw ArgumentError("spatial bandwidth m must lie in [1, L]");
  if (T < 1) throw ArgumentError("T must be at least 1");
  if (!std::isfinite(c)) throw ArgumentError("AR coefficient must be finite");
  if (noise_std < 0) throw ArgumentError("noise standard deviation must be nonnegative");

  const auto spatial = spectral_basis(spatial_similarity).leading(m);
  Rng innovation_rng(seed, streams::kInnovations);
  Rng noise_rng(seed, streams::kNoise);

  const Eigen::MatrixXd innovations = bandlimited_columns(spatial, T, innovation_rng);
  SpatioTemporalMatrix out;
  out.values.resize(L, T);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(L);
  for (int t = 0; t < T; ++t) {
    state = c * state + innovations.col(t);
    out.values.col(t) = state;
  }
  add_noise(out.values, noise_std, noise_rng);
  out.provenance = {"ar", seed, m, 0, r, kCoefficientStd, noise_std, c};
  return out;
}

std::string provenance_to_json(const SimulationProvenance& p) {
  nlohmann::ordered_json j;
  j["generator"] = p.generator;
  j["seed"] = p.seed;
  j["m"] = p.spatial_bandwidth;
  j["n"] = p.temporal_bandwidth;
  j["r"] = p.rank;
  j["coefficient_std"] = p.coefficient_std;
  j["noise_std"] = p.noise_std;
  j["c"] = p.ar_coefficient;
  return j.dump(2);
}

void write_provenance(const SimulationProvenance& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write provenance file: " + path.string());
  out << provenance_to_json(p) << '\n';
}

SimulationProvenance read_provenance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open provenance file: " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    SimulationProvenance p;
    p.generator = j.at("generator").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.spatial_bandwidth = j.at("m").get<int>();
    p.temporal_bandwidth = j.at("n").get<int>();
    p.rank = j.at("r").get<int>();
    p.coefficient_std = j.at("coefficient_std").get<double>();
    p.noise_std = j.at("noise_std").get<double>();
    p.ar_coefficient = j.at("c").get<double>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed provenance: " + e.what());
  }
}

}  // namespace driveby
