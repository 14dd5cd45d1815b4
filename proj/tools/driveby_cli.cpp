#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driveby/errors.hpp"
#include "driveby/grid_io.hpp"
#include "driveby/harness.hpp"
#include "driveby/log.hpp"

namespace fs = std::filesystem;
using namespace driveby;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// Options shared by every subcommand. Flags override the config file.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  std::optional<double> d_meters, radius_meters;
  std::optional<int> slot_minutes;
  std::optional<std::string> gtfs_dir;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "top-level seed");
  cmd->add_option("--threads", c.threads, "worker cap")->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", c.out_dir, "output directory");
  cmd->add_option("--d-meters", c.d_meters, "minimum stop separation in meters");
  cmd->add_option("--radius-meters", c.radius_meters, "coverage radius in meters");
  cmd->add_option("--slot-minutes", c.slot_minutes, "time slot width in minutes");
}

ExperimentConfig resolve(const Common& c) {
  auto cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (c.out_dir) cfg.out_dir = *c.out_dir;
  if (c.d_meters) cfg.d_meters = *c.d_meters;
  if (c.radius_meters) cfg.radius_meters = *c.radius_meters;
  if (c.slot_minutes) cfg.slot_minutes = *c.slot_minutes;
  if (c.gtfs_dir) cfg.gtfs_dir = *c.gtfs_dir;
  if (cfg.slot_minutes < 1) throw ArgumentError("--slot-minutes must be positive");
  if (cfg.d_meters < 0 || cfg.radius_meters < 0) throw ArgumentError("distances must be nonnegative");
  return cfg;
}

// Output file under the output directory, created on first use so failed runs
// leave nothing behind.
fs::path out_path(const ExperimentConfig& cfg, const fs::path& name) {
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir / name;
}

class Manifest {
 public:
  Manifest(std::string command, const ExperimentConfig& cfg)
      : start_(std::chrono::steady_clock::now()), cfg_(cfg) {
    j_["command"] = std::move(command);
    j_["tool_version"] = kToolVersion;
    const auto config = config_to_json(cfg);
    j_["config_hash"] = digest_hex(config);
    j_["seeds"] = {{"seed", cfg.seed}, {"fleet_seed", cfg.fleet.seed}};
    j_["inputs"] = nlohmann::ordered_json::object();
    j_["outputs"] = nlohmann::ordered_json::array();
    j_["config"] = nlohmann::ordered_json::parse(config);
  }
  void input(const fs::path& p) { j_["inputs"][p.string()] = file_digest(p); }
  void output(const fs::path& p) { j_["outputs"].push_back(p.filename().string()); }
  void set(const std::string& key, nlohmann::ordered_json value) { j_[key] = std::move(value); }
  void write(const std::string& stage) {
    j_["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const auto path = out_path(cfg_, stage + ".manifest.json");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << j_.dump(2) << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_;
  const ExperimentConfig& cfg_;
  nlohmann::ordered_json j_;
};

void check_shape(const OccupancyTensor& tensor, const LocationSet& locations) {
  if (static_cast<int>(locations.size()) != tensor.L()) {
    throw DataError("stage mismatch: tensor has L=" + std::to_string(tensor.L()) + " but the location file has " +
                    std::to_string(locations.size()) + " locations");
  }
}

void check_shape(const Eigen::MatrixXd& m, int L, int T, const std::string& what) {
  if (m.rows() != L || m.cols() != T) {
    throw DataError("stage mismatch: " + what + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                    ", expected " + std::to_string(L) + "x" + std::to_string(T));
  }
}

void print_metrics(const OccupancyTensor& tensor, const SimilarityMatrix& S, std::span<const int> chosen,
                   double rho) {
  std::printf("chosen:");
  for (const int b : chosen) std::printf(" %d", b);
  std::printf("\nPSC %.3f\nPC %.3f\nFLS %.3f\nRFL(%g) %.3f\n", psc_gain(tensor, chosen).value,
              pc_gain(tensor, chosen).value, 100.0 * fls_gain(tensor, chosen, S).value, rho,
              100.0 * rfl_gain(tensor, chosen, S, rho).value);
}

int cmd_ingest(const Common& common) {
  const auto cfg = resolve(common);
  Manifest manifest("ingest", cfg);
  LocationSet locations;
  std::optional<OccupancyTensor> tensor;
  if (cfg.gtfs_dir) {
    const auto dir = *cfg.gtfs_dir;
    const auto feed = load_gtfs_dir(dir);
    for (const char* f : {"stops.txt", "trips.txt", "stop_times.txt"}) manifest.input(dir / f);
    locations = subsample_stops(feed.stops, cfg.d_meters);
    const TimeGrid grid(6 * 3600, 22 * 3600, cfg.slot_minutes);
    tensor = build_occupancy(feed.visits, feed.stops, locations, grid, cfg.radius_meters,
                             static_cast<int>(feed.trip_ids.size()));
  } else {
    auto fleet = synth_fleet(cfg.fleet);
    locations = std::move(fleet.locations);
    tensor = std::move(fleet.tensor);
    manifest.set("synthetic_fleet", true);
  }
  tensor->write(out_path(cfg, "tensor.csv"));
  write_locations(locations, out_path(cfg, "locations.csv"));
  manifest.output("tensor.csv");
  manifest.output("locations.csv");
  manifest.set("shape", {{"L", tensor->L()}, {"T", tensor->T()}, {"B", tensor->B()}, {"nnz", tensor->nnz()},
                         {"density", tensor->density()}});
  manifest.write("ingest");
  std::printf("L=%d T=%d B=%d nnz=%zu\n", tensor->L(), tensor->T(), tensor->B(), tensor->nnz());
  return kExitOk;
}

struct SelectArgs {
  std::string tensor, locations, method = "rfl";
  std::optional<double> rho;
  int k = 0;
};

int cmd_select(const Common& common, const SelectArgs& a) {
  auto method = parse_method(a.method, a.rho.value_or(0.98));
  if (a.rho && !method.random && method.kind != ObjectiveKind::rfl) {
    throw ArgumentError("--rho only applies to method rfl");
  }
  if (a.k < 1) throw ArgumentError("--k must be a positive integer");
  const auto cfg = resolve(common);
  Manifest manifest("select", cfg);
  const auto tensor = OccupancyTensor::read(fs::path(a.tensor));
  const auto locations = read_locations(a.locations);
  manifest.input(a.tensor);
  manifest.input(a.locations);
  check_shape(tensor, locations);
  if (a.k > tensor.B()) {
    throw ArgumentError("--k=" + std::to_string(a.k) + " exceeds the fleet size B=" + std::to_string(tensor.B()));
  }
  const SimilarityMatrix S = normalized_similarity(distance_matrix(locations));
  const Workspace ws{locations, tensor, S, S};
  const auto result = run_method(method, ws, a.k, cfg.seed, cfg.threads);
  const auto path = out_path(cfg, "selection.json");
  std::ofstream(path) << selection_to_json(result) << '\n';
  manifest.output(path);
  manifest.set("method", method.label);
  manifest.write("select");
  print_metrics(tensor, S, result.chosen, method.random ? cfg.table_rho : method.rho);
  return kExitOk;
}

struct SimulateArgs {
  std::string tensor, locations;
  std::optional<std::string> kind;
  int instance = 0;
};

int cmd_simulate(const Common& common, const SimulateArgs& a) {
  auto cfg = resolve(common);
  if (a.kind) {
    if (*a.kind != "factored" && *a.kind != "ar") throw ArgumentError("--kind must be factored or ar");
    cfg.simulator.kind = *a.kind;
  }
  Manifest manifest("simulate", cfg);
  const auto tensor = OccupancyTensor::read(fs::path(a.tensor));
  const auto locations = read_locations(a.locations);
  manifest.input(a.tensor);
  manifest.input(a.locations);
  check_shape(tensor, locations);
  const auto d = distance_matrix(locations);
  const Workspace ws{locations, tensor, normalized_similarity(d), exponential_similarity(d, cfg.lambda_per_km)};
  const auto instance = generate_instance(cfg, ws, a.instance);
  write_grid(out_path(cfg, "truth.csv"), instance.truth.values);
  write_provenance(instance.truth.provenance, out_path(cfg, "truth.provenance.json"));
  manifest.output("truth.csv");
  manifest.output("truth.provenance.json");
  manifest.set("instance", a.instance);
  manifest.set("imputation_rank", instance.imputation_rank);
  manifest.write("simulate");
  return kExitOk;
}

struct ImputeArgs {
  std::string truth, tensor, locations, selection;
  std::optional<std::string> imputer;
  std::optional<int> rank;
};

int cmd_impute(const Common& common, const ImputeArgs& a) {
  auto cfg = resolve(common);
  if (a.imputer) {
    if (*a.imputer != "vbmc" && *a.imputer != "vbsf") throw ArgumentError("--imputer must be vbmc or vbsf");
    cfg.imputer.kind = *a.imputer;
  }
  if (a.rank) cfg.imputer.rank = *a.rank;
  Manifest manifest("impute", cfg);
  const auto tensor = OccupancyTensor::read(fs::path(a.tensor));
  const auto locations = read_locations(a.locations);
  const auto truth = read_grid(fs::path(a.truth));
  std::ifstream sel_in(a.selection);
  if (!sel_in) throw IoError("cannot open selection file: " + a.selection);
  std::stringstream sel_text;
  sel_text << sel_in.rdbuf();
  const auto selection = selection_from_json(sel_text.str());
  for (const auto& p : {a.tensor, a.locations, a.truth, a.selection}) manifest.input(p);
  check_shape(tensor, locations);
  check_shape(truth, tensor.L(), tensor.T(), "truth matrix");
  for (const int b : selection.chosen) {
    if (b < 0 || b >= tensor.B()) throw DataError("stage mismatch: selection names bus " + std::to_string(b) +
                                                  " outside the tensor's fleet of " + std::to_string(tensor.B()));
  }

  const auto obs = ObservationSet::from_mask(truth, sampling_matrix(tensor, selection.chosen));
  const auto G = exponential_similarity(distance_matrix(locations), cfg.lambda_per_km);
  ImputationOptions opt;
  opt.rank = cfg.imputer.rank > 0 ? cfg.imputer.rank : std::min<int>(5, std::min(tensor.L(), tensor.T()));
  opt.max_iters = cfg.imputer.max_iters;
  opt.tol = cfg.imputer.tol;
  opt.seed = cfg.seed;
  opt.side_information_weight = cfg.imputer.side_information_weight;
  opt.temporal_precision = cfg.imputer.temporal_precision;
  opt.learn_prior_precision = cfg.imputer.learn_prior_precision;
  opt.side_warmup_iters = cfg.imputer.side_warmup_iters;
  const auto result = cfg.imputer.kind == "vbsf" ? impute_vbsf_cs(obs, G, opt, &truth) : impute_vbmc_cs(obs, G, opt, &truth);
  obs.write(out_path(cfg, "observations.csv"));
  write_grid(out_path(cfg, "estimate.csv"), result.estimate);
  write_convergence_log(result.log, out_path(cfg, "convergence.csv"));
  for (const char* f : {"observations.csv", "estimate.csv", "convergence.csv"}) manifest.output(f);
  manifest.set("imputer", cfg.imputer.kind);
  manifest.set("rank", opt.rank);
  manifest.set("converged", result.converged);
  manifest.set("iterations", result.log.size());
  manifest.write("impute");
  std::printf("observed %zu of %d cells, %s after %zu iterations\n", obs.size(), tensor.L() * tensor.T(),
              result.converged ? "converged" : "not converged", result.log.size());
  return kExitOk;
}

struct EvaluateArgs {
  std::string truth, estimate;
};

int cmd_evaluate(const Common& common, const EvaluateArgs& a) {
  const auto cfg = resolve(common);
  Manifest manifest("evaluate", cfg);
  const auto truth = read_grid(fs::path(a.truth));
  const auto estimate = read_grid(fs::path(a.estimate));
  manifest.input(a.truth);
  manifest.input(a.estimate);
  check_shape(estimate, static_cast<int>(truth.rows()), static_cast<int>(truth.cols()), "estimate");
  const double score = mre_percent(truth, estimate);
  nlohmann::ordered_json j{{"mre_percent", score}};
  std::ofstream(out_path(cfg, "evaluation.json")) << j.dump(2) << '\n';
  manifest.output("evaluation.json");
  manifest.set("mre_percent", score);
  manifest.write("evaluate");
  std::printf("MRE %.6f%%\n", score);
  return kExitOk;
}

int cmd_report(const Common& common) {
  const auto cfg = resolve(common);
  Manifest manifest("report", cfg);
  if (cfg.gtfs_dir) {
    for (const char* f : {"stops.txt", "trips.txt", "stop_times.txt"}) manifest.input(*cfg.gtfs_dir / f);
  }
  const auto ws = prepare_workspace(cfg);
  manifest.set("shape", {{"L", ws.tensor.L()}, {"T", ws.tensor.T()}, {"B", ws.tensor.B()},
                         {"density", ws.tensor.density()}});

  const auto table1 = run_selection_table(cfg, ws);
  write_selection_table(table1, out_path(cfg, "table1_selection.csv"));
  manifest.output("table1_selection.csv");

  for (const auto& [kind, file] : {std::pair{"vbmc", "table2_mre_vbmc.csv"}, {"vbsf", "table3_mre_vbsf.csv"}}) {
    auto c = cfg;
    c.imputer.kind = kind;
    const auto cells = run_mre_table(c, ws);
    write_mre_table(cells, cfg.k_values, out_path(cfg, file));
    manifest.output(file);
  }

  // Coverage maps: RFL at the table rho against MCL at the largest k.
  const int k = *std::max_element(cfg.k_values.begin(), cfg.k_values.end());
  const auto rfl = run_method(parse_method("rfl", cfg.table_rho), ws, k, cfg.seed, cfg.threads);
  const auto mcl = run_method(parse_method("mcl"), ws, k, cfg.seed, cfg.threads);
  const auto theta_rfl = sampling_matrix(ws.tensor, rfl.chosen);
  const auto theta_mcl = sampling_matrix(ws.tensor, mcl.chosen);
  for (const int min_ts : {1, 10}) {
    const auto file = "coverage_min" + std::to_string(min_ts) + ".csv";
    write_coverage(coverage_classification(theta_rfl, theta_mcl, min_ts, &ws.locations), out_path(cfg, file));
    manifest.output(file);
  }
  manifest.write("report");
  std::printf("report written to %s\n", cfg.out_dir.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bus selection for drive-by sensing and dense-map imputation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  SelectArgs select;
  SimulateArgs simulate;
  ImputeArgs impute;
  EvaluateArgs evaluate;
  std::string gtfs_dir;

  auto* ingest_cmd = app.add_subcommand("ingest", "GTFS feed (or synthetic fleet) to occupancy tensor");
  add_common(ingest_cmd, common);
  ingest_cmd->add_option("--gtfs-dir", common.gtfs_dir, "directory with stops.txt, trips.txt, stop_times.txt");

  auto* select_cmd = app.add_subcommand("select", "greedy bus selection");
  add_common(select_cmd, common);
  select_cmd->add_option("--tensor", select.tensor, "occupancy tensor file")->required();
  select_cmd->add_option("--locations", select.locations, "location file")->required();
  select_cmd->add_option("--method", select.method, "random, mc, mcl, fls, rfl");
  select_cmd->add_option("--rho", select.rho, "temporal decay for rfl, in [0, 1]");
  select_cmd->add_option("--k", select.k, "number of buses")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "simulate a ground-truth dense map");
  add_common(simulate_cmd, common);
  simulate_cmd->add_option("--tensor", simulate.tensor, "occupancy tensor file")->required();
  simulate_cmd->add_option("--locations", simulate.locations, "location file")->required();
  simulate_cmd->add_option("--kind", simulate.kind, "factored or ar");
  simulate_cmd->add_option("--instance", simulate.instance, "instance index")->check(CLI::NonNegativeNumber);

  auto* impute_cmd = app.add_subcommand("impute", "mask the truth by a selection and impute");
  add_common(impute_cmd, common);
  impute_cmd->add_option("--truth", impute.truth, "ground-truth grid file")->required();
  impute_cmd->add_option("--tensor", impute.tensor, "occupancy tensor file")->required();
  impute_cmd->add_option("--locations", impute.locations, "location file")->required();
  impute_cmd->add_option("--selection", impute.selection, "selection JSON from select")->required();
  impute_cmd->add_option("--imputer", impute.imputer, "vbmc or vbsf");
  impute_cmd->add_option("--rank", impute.rank, "factor rank")->check(CLI::PositiveNumber);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "MRE of an estimate against the truth");
  add_common(evaluate_cmd, common);
  evaluate_cmd->add_option("--truth", evaluate.truth, "ground-truth grid file")->required();
  evaluate_cmd->add_option("--estimate", evaluate.estimate, "estimate grid file")->required();

  auto* report_cmd = app.add_subcommand("report", "selection and MRE tables plus coverage maps");
  add_common(report_cmd, common);
  report_cmd->add_option("--gtfs-dir", common.gtfs_dir, "use a GTFS feed instead of the synthetic fleet");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(common);
    if (*select_cmd) return cmd_select(common, select);
    if (*simulate_cmd) return cmd_simulate(common, simulate);
    if (*impute_cmd) return cmd_impute(common, impute);
    if (*evaluate_cmd) return cmd_evaluate(common, evaluate);
    if (*report_cmd) return cmd_report(common);
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
