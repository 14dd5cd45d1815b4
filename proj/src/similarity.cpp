#include "driveby/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driveby/csv.hpp"
#include "driveby/errors.hpp"
#include "driveby/geo.hpp"
#include "driveby/grid_io.hpp"
#include "driveby/log.hpp"

namespace driveby {

namespace {

constexpr double kCorrelationFloor = 1e-6;

// Pearson correlation over indices where both series are finite.
// Returns NaN when fewer than two shared points or either side is constant.
double pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y) {
  double sx = 0, sy = 0;
  int n = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      sx += x[i];
      sy += y[i];
      ++n;
    }
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = sx / n, my = sy / n;
  double cxy = 0, cxx = 0, cyy = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      cxy += (x[i] - mx) * (y[i] - my);
      cxx += (x[i] - mx) * (x[i] - mx);
      cyy += (y[i] - my) * (y[i] - my);
    }
  }
  if (cxx <= 0 || cyy <= 0) return std::numeric_limits<double>::quiet_NaN();
  return cxy / std::sqrt(cxx * cyy);
}

}  // namespace

DistanceMatrix distance_matrix(std::span<const Stop> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  DistanceMatrix d = DistanceMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto& a = points[i];
      const auto& b = points[j];
      d(i, j) = d(j, i) = geo::haversine_m(a.lat, a.lon, b.lat, b.lon);
    }
  }
  return d;
}

DistanceMatrix distance_matrix(const LocationSet& locations) {
  return distance_matrix(std::span<const Stop>(locations.locations));
}

SimilarityMatrix normalized_similarity(const DistanceMatrix& distances) {
  const double max_d = distances.size() ? distances.maxCoeff() : 0.0;
  if (!(max_d > 0)) {
    throw DegenerateInputError("distance matrix is all zero; normalized similarity undefined");
  }
  SimilarityMatrix s = (1.0 - distances.array() / max_d).matrix();
  s.diagonal().setOnes();
  return s;
}

SimilarityMatrix exponential_similarity(const DistanceMatrix& distances, double rate_per_km) {
  if (rate_per_km < 0) throw ArgumentError("similarity decay rate must be nonnegative");
  SimilarityMatrix g = (-rate_per_km * distances.array() / 1000.0).exp().matrix();
  g.diagonal().setOnes();
  return g;
}

StationReadings read_station_readings(const std::filesystem::path& grid_file,
                                      const std::filesystem::path& coordinates_file) {
  StationReadings out;
  out.values = read_grid(grid_file);
  const auto table = csv::Table::read(coordinates_file);
  const auto c_id = table.require_column("station_id");
  const auto c_lat = table.require_column("lat");
  const auto c_lon = table.require_column("lon");
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& row = table.row(i);
    out.stations.push_back(
        Stop{row[c_id], csv::parse_double(row[c_lat], "lat"), csv::parse_double(row[c_lon], "lon")});
  }
  if (static_cast<Eigen::Index>(out.stations.size()) != out.values.rows()) {
    throw DataError("station count mismatch: " + std::to_string(out.values.rows()) + " rows in " +
                    grid_file.string() + " but " + std::to_string(out.stations.size()) + " in " +
                    coordinates_file.string());
  }
  return out;
}

double fit_lambda(const StationReadings& readings) {
  const auto n = readings.values.rows();
  if (static_cast<Eigen::Index>(readings.stations.size()) != n) {
    throw DataError("station coordinates do not match reading rows");
  }
  const auto d = distance_matrix(readings.stations);
  double sum_dd = 0.0, sum_dlog = 0.0;
  int usable = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij_km = d(i, j) / 1000.0;
      if (!(dij_km > 0)) continue;
      double r = pearson(readings.values.row(i).transpose(), readings.values.row(j).transpose());
      if (std::isnan(r)) {
        // Identical constant series carry no spread; only ln(1) would be consistent.
        continue;
      }
      r = std::clamp(r, kCorrelationFloor, 1.0);
      sum_dd += dij_km * dij_km;
      sum_dlog += dij_km * std::log(r);
      ++usable;
    }
  }
  if (usable < 2) {
    throw DegenerateInputError("insufficient data to fit lambda: " + std::to_string(usable) +
                               " usable station pair(s), need at least 2");
  }
  return std::max(0.0, -sum_dlog / sum_dd);
}

Eigen::MatrixXd temporal_similarity_from_data(const Eigen::MatrixXd& readings) {
  const auto T = readings.cols();
  if (T < 2) throw ArgumentError("temporal similarity needs at least two timestamps");
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(T, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index u = t + 1; u < T; ++u) {
      const double r = pearson(readings.col(t), readings.col(u));
      h(t, u) = h(u, t) = std::isnan(r) ? 0.0 : std::clamp(r, 0.0, 1.0);
    }
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    if (std::isnan(pearson(readings.col(t), readings.col(t)))) {
      log::warn("timestamp column " + std::to_string(t) +
                " is constant across stations; its temporal similarities are set to 0");
    }
  }
  return h;
}

double causal_kernel(double rho, int t, int j) {
  if (t < j) return 0.0;
  return std::pow(rho, t - j);
}

bool is_similarity_matrix(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m(i, i) - 1.0) > tol) return false;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!(m(i, j) >= -tol && m(i, j) <= 1.0 + tol)) return false;
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    }
  }
  return true;
}

}  // namespace driveby
