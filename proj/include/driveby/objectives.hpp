#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driveby/occupancy.hpp"
#include "driveby/similarity.hpp"

namespace driveby {

enum class ObjectiveKind { pc, psc, fls, flst, rfl };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind objective_from_string(std::string_view name);

struct GainValue {
  double value = 0.0;
  ObjectiveKind kind = ObjectiveKind::rfl;
};

// Percentage of (l, t) cells covered by the subset, in [0, 100].
GainValue pc_gain(const OccupancyTensor& tensor, std::span<const int> subset);
// Percentage of locations covered at least once, in [0, 100].
GainValue psc_gain(const OccupancyTensor& tensor, std::span<const int> subset);
// Mean over (l, t) of the best similarity from l to a location sampled at t.
GainValue fls_gain(const OccupancyTensor& tensor, std::span<const int> subset,
                   const SimilarityMatrix& similarity);
// Space-time facility location by direct maximization over every sampled
// (m, j) with j <= t of S[l, m] * rho^(t - j). Cost grows with T^2; it is the
// slow reference for rfl_gain.
GainValue flst_gain_reference(const OccupancyTensor& tensor, std::span<const int> subset,
                              const SimilarityMatrix& similarity, double rho);
// Regressive facility location: pi_t = max(best similarity at t, rho * pi_{t-1}),
// pi_0 = 0, averaged over all (l, t).
GainValue rfl_gain(const OccupancyTensor& tensor, std::span<const int> subset,
                   const SimilarityMatrix& similarity, double rho);

// The L x T matrix of pi values behind rfl_gain (row l, column t).
Eigen::MatrixXd rfl_facility_values(const OccupancyTensor& tensor, std::span<const int> subset,
                                    const SimilarityMatrix& similarity, double rho);

// Incremental bookkeeping for a subset M under one objective.
struct GainState {
  ObjectiveKind kind = ObjectiveKind::rfl;
  double rho = 0.0;
  std::vector<int> members;
  std::vector<std::uint8_t> in_set;      // per bus
  std::vector<std::uint8_t> covered;     // L x T, row-major by location (pc)
  std::vector<int> location_hits;        // per location (psc)
  std::vector<double> spatial;           // L x T best similarity, 0 if nothing sampled
  std::vector<double> pi;                // L x T facility values (fls, rfl)
  std::size_t covered_count = 0;         // cells for pc, locations for psc
  double gain_sum = 0.0;                 // sum of pi over all (l, t)
  double value = 0.0;
};

// A set function over bus subsets bound to one tensor, similarity, and rho.
// The tensor and similarity must outlive the object.
class SetFunction {
 public:
  SetFunction(const OccupancyTensor& tensor, ObjectiveKind kind,
              const SimilarityMatrix* similarity = nullptr, double rho = 0.0);

  ObjectiveKind kind() const { return kind_; }
  double rho() const { return rho_; }
  int fleet_size() const { return tensor_->B(); }
  const OccupancyTensor& tensor() const { return *tensor_; }

  double operator()(std::span<const int> subset) const;

  GainState initial_state() const;
  // f(M + e) - f(M) for the state's subset M; leaves the state untouched.
  double incremental_gain(const GainState& state, int bus) const;
  void commit(GainState& state, int bus) const;

 private:
  double total_with(const GainState& state, int bus) const;

  const OccupancyTensor* tensor_;
  ObjectiveKind kind_;
  const SimilarityMatrix* similarity_;
  double rho_;
};

}  // namespace driveby
