#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driveby/greedy.hpp"
#include "driveby/imputation.hpp"
#include "driveby/objectives.hpp"
#include "driveby/occupancy.hpp"
#include "driveby/similarity.hpp"
#include "driveby/simgen.hpp"

namespace driveby {

// Desk-scale stand-in for a transit fleet: random locations in a square box and
// a pool of contiguous nearest-neighbour lines shared by the buses, a few busy
// lines carrying most of them.
struct FleetParams {
  int L = 60;
  int T = 24;
  int B = 40;
  int lines = 16;
  int routes_per_bus = 1;  // lines per bus, each served for an equal share of the day
  int stops_per_slot = 4;  // locations passed per time slot
  int min_route_length = 4;
  int max_route_length = 10;
  double extent_km = 15.0;
  double radius_m = 500.0;
  std::uint64_t seed = 1;
};

struct SyntheticFleet {
  LocationSet locations;
  TimeGrid grid;
  OccupancyTensor tensor;
};

SyntheticFleet synth_fleet(const FleetParams& params);

// A selection method: random baseline or greedy over one objective.
struct MethodSpec {
  std::string label;  // e.g. "rfl(0.98)"
  bool random = false;
  ObjectiveKind kind = ObjectiveKind::rfl;
  double rho = 0.0;
};

// Accepts random, mc, mcl, fls, rfl, and rfl:<rho>.
MethodSpec parse_method(const std::string& name, double default_rho = 0.98);

struct SimulatorConfig {
  std::string kind = "factored";  // "factored" or "ar"
  int instances = 10;
  double noise_std = kDefaultNoiseStd;
  int m_min = 5, m_max = 15;
  int n_min = 5, n_max = 15;
  int r_min = 20, r_max = 30;
  double ar_coefficient = 1.0;
  double temporal_ar = 0.9;  // autocorrelation of the synthetic monitors behind H
  int monitor_stations = 33;
};

struct ImputerConfig {
  std::string kind = "vbmc";  // "vbmc" or "vbsf"
  int rank = 0;               // 0: use the generating rank, min(m, n) or m
  int max_iters = 200;
  double tol = 1e-5;
  double side_information_weight = 1.0;
  double temporal_precision = 1.0;
  bool learn_prior_precision = true;
  int side_warmup_iters = 20;
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::optional<std::filesystem::path> gtfs_dir;
  double d_meters = 500.0;
  double radius_meters = 500.0;
  int slot_minutes = 10;
  FleetParams fleet;
  std::vector<std::string> methods = {"random", "mc", "mcl", "fls", "rfl:0.95", "rfl:0.98", "rfl:0.99", "rfl:1"};
  std::vector<int> k_values = {4, 8, 12};
  double lambda_per_km = kDelhiLambdaPerKm;
  double table_rho = 0.98;  // rho of the RFL column in the selection table
  int random_draws = 10;
  SimulatorConfig simulator;
  ImputerConfig imputer;
  int threads = 1;
  std::filesystem::path out_dir = "driveby_out";
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

// Fleet, similarity matrices, and metadata shared by the experiment stages.
struct Workspace {
  LocationSet locations;
  OccupancyTensor tensor;
  SimilarityMatrix selection_similarity;  // S, normalized distance
  SimilarityMatrix side_similarity;       // G, exponential
};

Workspace prepare_workspace(const ExperimentConfig& config);

SelectionResult run_method(const MethodSpec& method, const Workspace& ws, int k, std::uint64_t seed,
                           int threads = 1);

struct SelectionRow {
  std::string method;
  int k = 0;
  double psc = 0, pc = 0, fls = 0, rfl = 0;  // all in percent
  std::vector<int> chosen;
};

// Per method and k: PSC, PC, FLS, and RFL(table_rho) of the selected set.
// Random appears twice: one seeded draw and the mean of `random_draws` draws.
std::vector<SelectionRow> run_selection_table(const ExperimentConfig& config, const Workspace& ws);

struct MreCell {
  std::string method;
  int k = 0;
  double mean_mre_percent = 0;
  std::vector<double> per_instance;
};

struct GeneratedInstance {
  SpatioTemporalMatrix truth;
  int imputation_rank = 0;
};

GeneratedInstance generate_instance(const ExperimentConfig& config, const Workspace& ws, int index);
Eigen::MatrixXd monitor_temporal_similarity(const ExperimentConfig& config, int T);

// For each simulated instance and method x k: select, mask the truth by the
// sampling matrix, impute, and score. Reports per-method means.
std::vector<MreCell> run_mre_table(const ExperimentConfig& config, const Workspace& ws);

enum class CoverageLabel { both, rfl_only, other_only, neither };
std::string_view to_string(CoverageLabel label);

struct CoverageClass {
  int location = 0;
  double lat = 0, lon = 0;
  CoverageLabel label = CoverageLabel::neither;
};

// A location counts as covered by a selection when its row of the sampling
// matrix has at least `min_timestamps` ones.
std::vector<CoverageClass> coverage_classification(const SamplingMatrix& rfl,
                                                   const SamplingMatrix& other, int min_timestamps,
                                                   const LocationSet* locations = nullptr);

void write_selection_table(const std::vector<SelectionRow>& rows, const std::filesystem::path& path);
void write_mre_table(const std::vector<MreCell>& cells, const std::vector<int>& k_values,
                     const std::filesystem::path& path);
void write_coverage(const std::vector<CoverageClass>& classes, const std::filesystem::path& path);

// FNV-1a 64-bit digest, hex encoded.
std::string digest_hex(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace driveby
