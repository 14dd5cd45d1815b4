#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "driveby/occupancy.hpp"

namespace driveby {

struct Observation {
  int l = 0;
  int t = 0;
  double value = 0.0;
};

// Observed entries of an L x T matrix. Locations with no observation are the
// cold-start rows.
class ObservationSet {
 public:
  ObservationSet(int L, int T, std::vector<Observation> entries);
  // Entries of `truth` where `mask` is set.
  static ObservationSet from_mask(const Eigen::MatrixXd& truth, const SamplingMatrix& mask);

  int L() const { return L_; }
  int T() const { return T_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Observation>& entries() const { return entries_; }
  std::vector<int> cold_start_rows() const;
  bool observed_row(int l) const { return row_counts_[l] > 0; }

  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
  static ObservationSet read(std::istream& in, const std::string& source = "<stream>");
  static ObservationSet read(const std::filesystem::path& path);

 private:
  int L_;
  int T_;
  std::vector<Observation> entries_;  // sorted by (l, t)
  std::vector<int> row_counts_;
};

struct ImputationOptions {
  int rank = 5;
  int max_iters = 200;
  double tol = 1e-5;  // relative change of A B^T between iterations
  std::uint64_t seed = 0;
  double gamma = 1e-6;                 // prior precision on factor rows
  // Re-estimate gamma per factor each iteration. For VBSF the temporal chain
  // then becomes the prior on B, with its precision re-estimated instead.
  bool learn_prior_precision = false;
  double side_information_weight = 1.0;  // p in beta1 = p L^2 / E||G - A C^T||^2
  bool use_side_information = true;
  // A second start fits the observations alone for up to this many iterations
  // before switching on the G term; the start with the lower final free energy
  // is kept. With dense observations the plain start can settle in a basin
  // where G dominates and the data is underfit. 0 disables the second start.
  int side_warmup_iters = 20;
  double temporal_precision = 1.0;     // weight of sum_t ||b_t - F b_{t-1}||^2 (VBSF only)
  std::optional<Eigen::MatrixXd> fixed_transition;  // hold F instead of re-estimating
  double extra_time_ridge = 0.0;       // additional ridge on rows of B
};

struct CompletionFactors {
  Eigen::MatrixXd A;  // L x r
  Eigen::MatrixXd B;  // T x r
  Eigen::MatrixXd C;  // L x r, side-information factor
  Eigen::MatrixXd F;  // r x r temporal transition
  double beta = 1.0;
  double beta_side = 1.0;
  std::vector<Eigen::MatrixXd> cov_A;  // per row of A
  std::vector<Eigen::MatrixXd> cov_B;  // per row of B
  Eigen::MatrixXd cov_C;               // shared by the rows of C
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;  // free energy, nonincreasing
  double relative_change = 0.0;
  std::optional<double> mre;  // against the supplied truth
};

struct ImputationResult {
  Eigen::MatrixXd estimate;  // A B^T
  CompletionFactors factors;
  std::vector<IterationRecord> log;
  bool converged = false;
  int monotonicity_violations = 0;
  int side_start = 1;  // first iteration whose objective includes the G terms
};

// Low-rank completion with cold-start side information: fits
// P_Omega(Y) ~ A B^T and G ~ A C^T by mean-field coordinate updates.
ImputationResult impute_vbmc_cs(const ObservationSet& obs, const Eigen::MatrixXd& side_similarity,
                                const ImputationOptions& options,
                                const Eigen::MatrixXd* truth = nullptr);

// As impute_vbmc_cs with the temporal penalty sum_t ||b_t - F b_{t-1}||^2 on
// the time factor; F is re-estimated by least squares each iteration.
ImputationResult impute_vbsf_cs(const ObservationSet& obs, const Eigen::MatrixXd& side_similarity,
                                const ImputationOptions& options,
                                const Eigen::MatrixXd* truth = nullptr);

// ||truth - estimate||_F / ||truth||_F.
double mre(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate);
inline double mre_percent(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
  return 100.0 * mre(truth, estimate);
}

void write_convergence_log(const std::vector<IterationRecord>& log, const std::filesystem::path& path);

}  // namespace driveby
