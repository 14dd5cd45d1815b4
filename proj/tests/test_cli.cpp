#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driveby/grid_io.hpp"
#include "driveby/greedy.hpp"
#include "driveby/harness.hpp"
#include "oracles.hpp"

using namespace driveby;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = DRIVEBY_FIXTURES;

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args, const fs::path& scratch) {
  const auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string(DRIVEBY_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("ingest") {
  const auto dir = oracle::temp_dir("cli_ingest");
  const auto r = run("ingest --gtfs-dir " + (kFixtures / "gtfs_two_bus").string() + " --out-dir " +
                         (dir / "out").string(),
                     dir);
  REQUIRE(r.code == 0);
  CHECK(first_line(dir / "out" / "tensor.csv") == "3,96,2");
  CHECK(OccupancyTensor::read(dir / "out" / "tensor.csv").nnz() == 5);
  CHECK(read_locations(dir / "out" / "locations.csv").size() == 3);

  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "ingest.manifest.json"));
  CHECK(manifest["command"] == "ingest");
  CHECK(manifest["tool_version"] == kToolVersion);
  CHECK(manifest["inputs"].size() == 3);
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.contains("wall_time_s"));

  const auto coarse = run("ingest --gtfs-dir " + (kFixtures / "gtfs_two_bus").string() + " --slot-minutes 60 --out-dir " +
                              (dir / "coarse").string(),
                          dir);
  REQUIRE(coarse.code == 0);
  CHECK(first_line(dir / "coarse" / "tensor.csv") == "3,16,2");

  const auto missing = run("ingest --gtfs-dir /no/such/feed --out-dir " + (dir / "x").string(), dir);
  CHECK(missing.code == 3);
  CHECK(missing.err.find("/no/such/feed") != std::string::npos);
}

TEST_CASE("select") {
  const auto dir = oracle::temp_dir("cli_select");
  REQUIRE(run("ingest --out-dir " + (dir / "fleet").string(), dir).code == 0);
  const std::string inputs =
      " --tensor " + (dir / "fleet" / "tensor.csv").string() + " --locations " + (dir / "fleet" / "locations.csv").string();

  const auto fls = run("select" + inputs + " --method fls --k 5 --out-dir " + (dir / "fls").string(), dir);
  const auto rfl0 = run("select" + inputs + " --method rfl --rho 0 --k 5 --out-dir " + (dir / "rfl0").string(), dir);
  REQUIRE(fls.code == 0);
  REQUIRE(rfl0.code == 0);
  CHECK(selection_from_json(slurp(dir / "fls" / "selection.json")).chosen ==
        selection_from_json(slurp(dir / "rfl0" / "selection.json")).chosen);
  CHECK(fls.out.find("chosen:") != std::string::npos);
  CHECK(fls.out.find("PSC") != std::string::npos);

  const auto again = run("select" + inputs + " --method fls --k 5 --out-dir " + (dir / "fls2").string(), dir);
  REQUIRE(again.code == 0);
  CHECK(slurp(dir / "fls" / "selection.json") == slurp(dir / "fls2" / "selection.json"));

  const auto unknown = run("select" + inputs + " --method best --k 5", dir);
  CHECK(unknown.code == 2);
  for (const char* name : {"random", "mc", "mcl", "fls", "rfl"}) CHECK(unknown.err.find(name) != std::string::npos);
  CHECK(run("select" + inputs + " --method rfl --k 0 --out-dir " + (dir / "never").string(), dir).code == 2);
  CHECK_FALSE(fs::exists(dir / "never"));
  CHECK(run("select" + inputs + " --method rfl --k 41", dir).code == 2);
  CHECK(run("select" + inputs + " --method mc --rho 0.5 --k 2", dir).code == 2);
  CHECK(run("select" + inputs, dir).code == 2);
  CHECK(run("", dir).code == 2);
  CHECK(run("select --bogus-flag", dir).code == 2);

  std::ofstream(dir / "two.csv") << "stop_id,lat,lon\na,28.6,77.2\nb,28.7,77.2\n";
  const auto mismatch = run("select --tensor " + (dir / "fleet" / "tensor.csv").string() + " --locations " +
                                (dir / "two.csv").string() + " --k 2",
                            dir);
  CHECK(mismatch.code == 3);
  CHECK(mismatch.err.find("mismatch") != std::string::npos);
}

TEST_CASE("simulate, impute, evaluate") {
  const auto dir = oracle::temp_dir("cli_pipeline");
  REQUIRE(run("ingest --out-dir " + (dir / "fleet").string(), dir).code == 0);
  const auto tensor = (dir / "fleet" / "tensor.csv").string();
  const auto locations = (dir / "fleet" / "locations.csv").string();
  const std::string inputs = " --tensor " + tensor + " --locations " + locations;

  REQUIRE(run("simulate" + inputs + " --seed 4 --out-dir " + (dir / "sim1").string(), dir).code == 0);
  REQUIRE(run("simulate" + inputs + " --seed 4 --out-dir " + (dir / "sim2").string(), dir).code == 0);
  CHECK(file_digest(dir / "sim1" / "truth.csv") == file_digest(dir / "sim2" / "truth.csv"));
  CHECK(read_provenance(dir / "sim1" / "truth.provenance.json").generator == "factored");
  CHECK(run("simulate" + inputs + " --kind nope", dir).code == 2);

  REQUIRE(run("select" + inputs + " --method rfl --k 8 --out-dir " + (dir / "sel").string(), dir).code == 0);
  const auto truth = (dir / "sim1" / "truth.csv").string();
  const auto imp = run("impute --truth " + truth + inputs + " --selection " + (dir / "sel" / "selection.json").string() +
                           " --imputer vbsf --out-dir " + (dir / "imp").string(),
                       dir);
  REQUIRE(imp.code == 0);
  CHECK(fs::exists(dir / "imp" / "estimate.csv"));
  CHECK(first_line(dir / "imp" / "convergence.csv") == "iteration,objective,relative_change,mre");

  const auto ev = run("evaluate --truth " + truth + " --estimate " + (dir / "imp" / "estimate.csv").string() +
                          " --out-dir " + (dir / "ev").string(),
                      dir);
  REQUIRE(ev.code == 0);
  const auto score = nlohmann::json::parse(slurp(dir / "ev" / "evaluation.json"))["mre_percent"].get<double>();
  CHECK(score > 0.0);
  CHECK(score < 100.0);

  // A truth matrix of the wrong shape is rejected before any compute.
  write_grid(dir / "small.csv", Eigen::MatrixXd::Ones(3, 3));
  const auto bad = run("impute --truth " + (dir / "small.csv").string() + inputs + " --selection " +
                           (dir / "sel" / "selection.json").string() + " --out-dir " + (dir / "bad").string(),
                       dir);
  CHECK(bad.code == 3);
  CHECK(bad.err.find("stage mismatch") != std::string::npos);
  CHECK(run("evaluate --truth " + truth + " --estimate " + (dir / "small.csv").string(), dir).code == 3);
}

TEST_CASE("impute on a fully observed grid") {
  const auto dir = oracle::temp_dir("cli_full");
  std::vector<Cell> cells;
  for (int l = 0; l < 6; ++l)
    for (int t = 0; t < 5; ++t) cells.push_back({l, t, 0});
  OccupancyTensor(6, 5, 1, cells).write(dir / "tensor.csv");
  LocationSet locs;
  for (int l = 0; l < 6; ++l) locs.locations.push_back({std::to_string(l), 28.6 + 0.01 * l, 77.2});
  write_locations(locs, dir / "locations.csv");
  Eigen::MatrixXd y(6, 5);
  for (int l = 0; l < 6; ++l)
    for (int t = 0; t < 5; ++t) y(l, t) = (1.0 + l) * (2.0 - 0.3 * t);
  write_grid(dir / "truth.csv", y);
  SelectionResult sel;
  sel.method = "lazy_greedy";
  sel.chosen = {0};
  sel.gain_trajectory = {100.0};
  sel.kind = ObjectiveKind::pc;
  sel.k = 1;
  std::ofstream(dir / "selection.json") << selection_to_json(sel);
  ExperimentConfig c;
  c.imputer.tol = 1e-10;
  c.imputer.max_iters = 1000;
  std::ofstream(dir / "config.json") << config_to_json(c);

  const auto r = run("impute --truth " + (dir / "truth.csv").string() + " --tensor " + (dir / "tensor.csv").string() +
                         " --locations " + (dir / "locations.csv").string() + " --selection " +
                         (dir / "selection.json").string() + " --rank 1 --config " + (dir / "config.json").string() + " --out-dir " + (dir / "out").string(),
                     dir);
  REQUIRE(r.code == 0);
  CHECK(mre(y, read_grid(dir / "out" / "estimate.csv")) <= 1e-6);
}

TEST_CASE("report end to end") {
  const auto dir = oracle::temp_dir("cli_report");
  ExperimentConfig c;
  c.fleet.L = 20;
  c.fleet.T = 12;
  c.fleet.B = 10;
  c.fleet.lines = 6;
  c.fleet.max_route_length = 6;
  c.k_values = {2, 4};
  c.methods = {"random", "mc", "rfl"};
  c.simulator.instances = 2;
  c.simulator.m_max = 8;
  c.simulator.n_max = 8;
  c.random_draws = 2;
  std::ofstream(dir / "config.json") << config_to_json(c);

  const auto r = run("report --config " + (dir / "config.json").string() + " --out-dir " + (dir / "rep").string(), dir);
  REQUIRE(r.code == 0);
  const auto rep = dir / "rep";
  CHECK(first_line(rep / "table1_selection.csv") == "method,k,PSC,PC,FLS,RFL");
  CHECK(first_line(rep / "table2_mre_vbmc.csv") == "k,random,mc,rfl(0.98)");
  CHECK(first_line(rep / "table3_mre_vbsf.csv") == "k,random,mc,rfl(0.98)");
  CHECK(first_line(rep / "coverage_min1.csv") == "lat,lon,label");
  CHECK(fs::exists(rep / "coverage_min10.csv"));
  const auto manifest = nlohmann::json::parse(slurp(rep / "report.manifest.json"));
  CHECK(manifest["config"]["fleet"]["L"] == 20);
  CHECK(manifest["seeds"]["seed"] == c.seed);

  // Same inputs, same tables.
  REQUIRE(run("report --config " + (dir / "config.json").string() + " --out-dir " + (dir / "rep2").string(), dir).code == 0);
  for (const char* f : {"table1_selection.csv", "table2_mre_vbmc.csv", "table3_mre_vbsf.csv", "coverage_min1.csv"})
    CHECK(file_digest(rep / f) == file_digest(dir / "rep2" / f));

  std::ofstream(dir / "bad.json") << "{\"methods\": [\"best\"]}";
  CHECK(run("report --config " + (dir / "bad.json").string(), dir).code == 2);
  std::ofstream(dir / "broken.json") << "{";
  CHECK(run("report --config " + (dir / "broken.json").string(), dir).code == 3);
}
