#include "driveby/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "driveby/errors.hpp"
#include "driveby/geo.hpp"
#include "driveby/log.hpp"
#include "driveby/rng.hpp"

namespace driveby {

namespace {

constexpr double kBoxCenterLat = 28.6139;
constexpr double kBoxCenterLon = 77.2090;
constexpr double kKmPerDegreeLat = 111.195;

std::uint64_t instance_seed(std::uint64_t seed, int index) {
  return splitmix64(seed ^ splitmix64(0xA5A5A5A5ULL + static_cast<std::uint64_t>(index)));
}

std::string format_rho(double rho) {
  std::ostringstream out;
  out << rho;
  return out.str();
}

}  // namespace

SyntheticFleet synth_fleet(const FleetParams& p) {
  if (p.L < 1 || p.T < 1 || p.B < 1 || p.routes_per_bus < 1 || p.stops_per_slot < 1 ||
      p.lines < 1) {
    throw ArgumentError("fleet parameters must be positive");
  }
  if (p.min_route_length < 1 || p.max_route_length < p.min_route_length) {
    throw ArgumentError("route length range is empty");
  }
  Rng rng(p.seed, streams::kFleet);

  // Locations: uniform in the box, at least radius_m apart.
  const double km_per_degree_lon = kKmPerDegreeLat * std::cos(kBoxCenterLat * std::numbers::pi / 180.0);
  LocationSet locations;
  locations.min_separation_m = p.radius_m;
  int attempts = 0;
  while (static_cast<int>(locations.size()) < p.L) {
    if (++attempts > 1000 * p.L) {
      throw ArgumentError("cannot place " + std::to_string(p.L) + " locations " +
                          std::to_string(p.radius_m) + " m apart in a " +
                          std::to_string(p.extent_km) + " km box");
    }
    const double dx = (rng.uniform() - 0.5) * p.extent_km;
    const double dy = (rng.uniform() - 0.5) * p.extent_km;
    Stop s{"loc" + std::to_string(locations.size()), kBoxCenterLat + dy / kKmPerDegreeLat,
           kBoxCenterLon + dx / km_per_degree_lon};
    const bool far_enough = std::all_of(locations.locations.begin(), locations.locations.end(), [&](const Stop& o) {
      return geo::haversine_m(s.lat, s.lon, o.lat, o.lon) >= p.radius_m;
    });
    if (far_enough) locations.locations.push_back(std::move(s));
  }

  const int slot_minutes = std::max(1, (16 * 60) / p.T);
  const int start = 6 * 3600;
  TimeGrid grid(start, start + p.T * slot_minutes * 60, slot_minutes);

  auto distance = [&](int a, int b) {
    const auto& x = locations.locations[a];
    const auto& y = locations.locations[b];
    return geo::haversine_m(x.lat, x.lon, y.lat, y.lon);
  };

  // The network has `lines` routes with popularity falling off as 1/(rank+1).
  auto make_route = [&] {
    const int length = static_cast<int>(std::min<long long>(p.L, rng.between(p.min_route_length, p.max_route_length)));
    std::vector<int> route{static_cast<int>(rng.below(static_cast<std::uint64_t>(p.L)))};
    std::vector<std::uint8_t> used(static_cast<std::size_t>(p.L), 0);
    used[route[0]] = 1;
    while (static_cast<int>(route.size()) < length) {
      std::vector<int> candidates;
      for (int l = 0; l < p.L; ++l) {
        if (!used[l]) candidates.push_back(l);
      }
      const int last = route.back();
      std::sort(candidates.begin(), candidates.end(), [&](int x, int y) {
        const double dx = distance(last, x), dy = distance(last, y);
        return dx != dy ? dx < dy : x < y;
      });
      const auto pick = rng.below(std::min<std::size_t>(3, candidates.size()));
      route.push_back(candidates[pick]);
      used[route.back()] = 1;
    }
    return route;
  };
  std::vector<std::vector<int>> lines;
  std::vector<double> cumulative;
  for (int i = 0; i < p.lines; ++i) {
    lines.push_back(make_route());
    cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + 1.0 / (i + 1));
  }
  auto draw_line = [&]() -> const std::vector<int>& {
    const double u = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return lines[std::min<std::size_t>(it - cumulative.begin(), lines.size() - 1)];
  };

  // Each bus splits the day into routes_per_bus equal blocks and shuttles back
  // and forth along one line per block, starting at a random point.
  std::vector<TimedVisit> visits;
  const int block = (p.T + p.routes_per_bus - 1) / p.routes_per_bus;
  for (int b = 0; b < p.B; ++b) {
    for (int r = 0; r < p.routes_per_bus; ++r) {
      const auto& route = draw_line();
      const int length = static_cast<int>(route.size());
      const int period = std::max(1, 2 * (length - 1));
      int pos = static_cast<int>(rng.below(static_cast<std::uint64_t>(period)));
      for (int slot = r * block; slot < std::min(p.T, (r + 1) * block); ++slot) {
        for (int step = 0; step < p.stops_per_slot; ++step) {
          const int leg = pos % period;
          const int stop = route[leg < length ? leg : period - leg];
          const int seconds = start + slot * slot_minutes * 60 + (step * slot_minutes * 60) / p.stops_per_slot;
          visits.push_back({b, locations.locations[stop].id, seconds});
          ++pos;
        }
      }
    }
  }

  auto tensor = build_occupancy(visits, locations.locations, locations, grid, p.radius_m, p.B);
  return SyntheticFleet{std::move(locations), grid, std::move(tensor)};
}

MethodSpec parse_method(const std::string& name, double default_rho) {
  MethodSpec m;
  std::string base = name;
  std::optional<double> rho;
  if (const auto colon = name.find(':'); colon != std::string::npos) {
    base = name.substr(0, colon);
    try {
      rho = std::stod(name.substr(colon + 1));
    } catch (const std::exception&) {
      throw ArgumentError("invalid rho in method '" + name + "'");
    }
  }
  if (base == "random") {
    m.random = true;
    m.label = "random";
  } else if (base == "mc") {
    m.kind = ObjectiveKind::pc;
    m.label = "mc";
  } else if (base == "mcl") {
    m.kind = ObjectiveKind::psc;
    m.label = "mcl";
  } else if (base == "fls") {
    m.kind = ObjectiveKind::fls;
    m.label = "fls";
  } else if (base == "rfl") {
    m.kind = ObjectiveKind::rfl;
    m.rho = rho.value_or(default_rho);
    if (!(m.rho >= 0.0 && m.rho <= 1.0)) throw ArgumentError("rho must lie in [0, 1]");
    m.label = "rfl(" + format_rho(m.rho) + ")";
  } else {
    throw ArgumentError("unknown method '" + name + "'; valid methods: random, mc, mcl, fls, rfl");
  }
  if (rho && base != "rfl") throw ArgumentError("only rfl takes a rho suffix: '" + name + "'");
  return m;
}

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    read_if(j, "seed", c.seed);
    if (j.contains("gtfs_dir")) c.gtfs_dir = j.at("gtfs_dir").get<std::string>();
    read_if(j, "d_meters", c.d_meters);
    read_if(j, "radius_meters", c.radius_meters);
    read_if(j, "slot_minutes", c.slot_minutes);
    if (j.contains("fleet")) {
      const auto& f = j.at("fleet");
      read_if(f, "L", c.fleet.L);
      read_if(f, "T", c.fleet.T);
      read_if(f, "B", c.fleet.B);
      read_if(f, "routes_per_bus", c.fleet.routes_per_bus);
      read_if(f, "stops_per_slot", c.fleet.stops_per_slot);
      read_if(f, "lines", c.fleet.lines);
      read_if(f, "min_route_length", c.fleet.min_route_length);
      read_if(f, "max_route_length", c.fleet.max_route_length);
      read_if(f, "extent_km", c.fleet.extent_km);
      read_if(f, "radius_m", c.fleet.radius_m);
      read_if(f, "seed", c.fleet.seed);
    }
    read_if(j, "methods", c.methods);
    read_if(j, "k", c.k_values);
    read_if(j, "lambda_per_km", c.lambda_per_km);
    read_if(j, "table_rho", c.table_rho);
    read_if(j, "random_draws", c.random_draws);
    read_if(j, "threads", c.threads);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("simulator")) {
      const auto& s = j.at("simulator");
      read_if(s, "kind", c.simulator.kind);
      read_if(s, "instances", c.simulator.instances);
      read_if(s, "noise_std", c.simulator.noise_std);
      read_if(s, "m_min", c.simulator.m_min);
      read_if(s, "m_max", c.simulator.m_max);
      read_if(s, "n_min", c.simulator.n_min);
      read_if(s, "n_max", c.simulator.n_max);
      read_if(s, "r_min", c.simulator.r_min);
      read_if(s, "r_max", c.simulator.r_max);
      read_if(s, "c", c.simulator.ar_coefficient);
      read_if(s, "temporal_ar", c.simulator.temporal_ar);
      read_if(s, "monitor_stations", c.simulator.monitor_stations);
    }
    if (j.contains("imputer")) {
      const auto& s = j.at("imputer");
      read_if(s, "kind", c.imputer.kind);
      read_if(s, "rank", c.imputer.rank);
      read_if(s, "max_iters", c.imputer.max_iters);
      read_if(s, "tol", c.imputer.tol);
      read_if(s, "side_information_weight", c.imputer.side_information_weight);
      read_if(s, "temporal_precision", c.imputer.temporal_precision);
      read_if(s, "learn_prior_precision", c.imputer.learn_prior_precision);
      read_if(s, "side_warmup_iters", c.imputer.side_warmup_iters);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed config: ") + e.what());
  }
  for (const auto& m : c.methods) parse_method(m, c.table_rho);
  if (c.simulator.kind != "factored" && c.simulator.kind != "ar") {
    throw ArgumentError("unknown simulator '" + c.simulator.kind + "' (factored, ar)");
  }
  if (c.imputer.kind != "vbmc" && c.imputer.kind != "vbsf") {
    throw ArgumentError("unknown imputer '" + c.imputer.kind + "' (vbmc, vbsf)");
  }
  for (const int k : c.k_values) {
    if (k < 1) throw ArgumentError("k values must be positive");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  if (c.gtfs_dir) j["gtfs_dir"] = c.gtfs_dir->string();
  j["d_meters"] = c.d_meters;
  j["radius_meters"] = c.radius_meters;
  j["slot_minutes"] = c.slot_minutes;
  j["fleet"] = {{"L", c.fleet.L},
                {"T", c.fleet.T},
                {"B", c.fleet.B},
                {"routes_per_bus", c.fleet.routes_per_bus},
                {"stops_per_slot", c.fleet.stops_per_slot},
                {"lines", c.fleet.lines},
                {"min_route_length", c.fleet.min_route_length},
                {"max_route_length", c.fleet.max_route_length},
                {"extent_km", c.fleet.extent_km},
                {"radius_m", c.fleet.radius_m},
                {"seed", c.fleet.seed}};
  j["methods"] = c.methods;
  j["k"] = c.k_values;
  j["lambda_per_km"] = c.lambda_per_km;
  j["table_rho"] = c.table_rho;
  j["random_draws"] = c.random_draws;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir.string();
  j["simulator"] = {{"kind", c.simulator.kind},
                    {"instances", c.simulator.instances},
                    {"noise_std", c.simulator.noise_std},
                    {"m_min", c.simulator.m_min},
                    {"m_max", c.simulator.m_max},
                    {"n_min", c.simulator.n_min},
                    {"n_max", c.simulator.n_max},
                    {"r_min", c.simulator.r_min},
                    {"r_max", c.simulator.r_max},
                    {"c", c.simulator.ar_coefficient},
                    {"temporal_ar", c.simulator.temporal_ar},
                    {"monitor_stations", c.simulator.monitor_stations}};
  j["imputer"] = {{"kind", c.imputer.kind},
                  {"rank", c.imputer.rank},
                  {"max_iters", c.imputer.max_iters},
                  {"tol", c.imputer.tol},
                  {"side_information_weight", c.imputer.side_information_weight},
                  {"temporal_precision", c.imputer.temporal_precision},
                  {"learn_prior_precision", c.imputer.learn_prior_precision},
                  {"side_warmup_iters", c.imputer.side_warmup_iters}};
  return j.dump(2);
}

Workspace prepare_workspace(const ExperimentConfig& config) {
  LocationSet locations;
  std::optional<OccupancyTensor> tensor;
  if (config.gtfs_dir) {
    const auto feed = load_gtfs_dir(*config.gtfs_dir);
    locations = subsample_stops(feed.stops, config.d_meters);
    const TimeGrid grid(6 * 3600, 22 * 3600, config.slot_minutes);
    tensor = build_occupancy(feed.visits, feed.stops, locations, grid, config.radius_meters,
                             static_cast<int>(feed.trip_ids.size()));
  } else {
    auto fleet = synth_fleet(config.fleet);
    locations = std::move(fleet.locations);
    tensor = std::move(fleet.tensor);
  }
  for (const int k : config.k_values) {
    if (k > tensor->B()) {
      throw ArgumentError("k=" + std::to_string(k) + " exceeds the fleet size B=" + std::to_string(tensor->B()));
    }
  }
  const auto d = distance_matrix(locations);
  Workspace ws{std::move(locations), std::move(*tensor), normalized_similarity(d),
               exponential_similarity(d, config.lambda_per_km)};
  return ws;
}

SelectionResult run_method(const MethodSpec& method, const Workspace& ws, int k, std::uint64_t seed,
                           int threads) {
  if (method.random) {
    const SetFunction f(ws.tensor, ObjectiveKind::rfl, &ws.selection_similarity, 0.98);
    return random_select(f, k, seed);
  }
  const SetFunction f(ws.tensor, method.kind, &ws.selection_similarity, method.rho);
  return threads > 1 ? greedy_select(f, k, threads) : lazy_greedy_select(f, k);
}

namespace {

SelectionRow score_selection(const std::string& label, int k, std::span<const int> chosen,
                             const Workspace& ws, double table_rho) {
  SelectionRow row;
  row.method = label;
  row.k = k;
  row.chosen.assign(chosen.begin(), chosen.end());
  row.psc = psc_gain(ws.tensor, chosen).value;
  row.pc = pc_gain(ws.tensor, chosen).value;
  row.fls = 100.0 * fls_gain(ws.tensor, chosen, ws.selection_similarity).value;
  row.rfl = 100.0 * rfl_gain(ws.tensor, chosen, ws.selection_similarity, table_rho).value;
  return row;
}

}  // namespace

std::vector<SelectionRow> run_selection_table(const ExperimentConfig& config, const Workspace& ws) {
  std::vector<SelectionRow> rows;
  for (const int k : config.k_values) {
    for (const auto& name : config.methods) {
      const auto method = parse_method(name, config.table_rho);
      if (method.random) {
        const auto draw = run_method(method, ws, k, config.seed, config.threads);
        rows.push_back(score_selection("random(seed)", k, draw.chosen, ws, config.table_rho));
        SelectionRow mean;
        mean.method = "random(mean of " + std::to_string(config.random_draws) + ")";
        mean.k = k;
        for (int d = 0; d < config.random_draws; ++d) {
          const auto r = run_method(method, ws, k, instance_seed(config.seed, 1000 + d), config.threads);
          const auto s = score_selection(mean.method, k, r.chosen, ws, config.table_rho);
          mean.psc += s.psc / config.random_draws;
          mean.pc += s.pc / config.random_draws;
          mean.fls += s.fls / config.random_draws;
          mean.rfl += s.rfl / config.random_draws;
        }
        rows.push_back(mean);
      } else {
        const auto r = run_method(method, ws, k, config.seed, config.threads);
        rows.push_back(score_selection(method.label, k, r.chosen, ws, config.table_rho));
      }
    }
  }
  return rows;
}

Eigen::MatrixXd monitor_temporal_similarity(const ExperimentConfig& config, int T) {
  // Stationary AR(1) series at synthetic static monitors; H is learned from
  // them the same way it would be from real monitor data.
  const auto& sim = config.simulator;
  Rng rng(config.seed, streams::kStations);
  Eigen::MatrixXd readings(sim.monitor_stations, T);
  const double phi = sim.temporal_ar;
  const double innovation = std::sqrt(std::max(0.0, 1.0 - phi * phi));
  for (int s = 0; s < sim.monitor_stations; ++s) {
    double x = rng.normal();
    for (int t = 0; t < T; ++t) {
      if (t > 0) x = phi * x + innovation * rng.normal();
      readings(s, t) = x;
    }
  }
  return temporal_similarity_from_data(readings);
}

GeneratedInstance generate_instance(const ExperimentConfig& config, const Workspace& ws, int index) {
  const auto& sim = config.simulator;
  const int L = ws.tensor.L(), T = ws.tensor.T();
  const auto seed = instance_seed(config.seed, index);
  Rng params(seed, streams::kInstanceParams);
  const int m = static_cast<int>(params.between(std::min(sim.m_min, L), std::min(sim.m_max, L)));
  const int n = static_cast<int>(params.between(std::min(sim.n_min, T), std::min(sim.n_max, T)));
  const int r = static_cast<int>(params.between(sim.r_min, sim.r_max));

  GeneratedInstance out;
  if (sim.kind == "ar") {
    out.truth = simulate_ar(ws.side_similarity, m, r, sim.ar_coefficient, T, sim.noise_std, seed);
    out.imputation_rank = m;
  } else {
    const auto h = monitor_temporal_similarity(config, T);
    out.truth = simulate_factored(ws.side_similarity, h, m, n, r, sim.noise_std, seed);
    out.imputation_rank = std::min({m, n, r});
  }
  if (config.imputer.rank > 0) out.imputation_rank = config.imputer.rank;
  out.imputation_rank = std::min({out.imputation_rank, L, T});
  return out;
}

std::vector<MreCell> run_mre_table(const ExperimentConfig& config, const Workspace& ws) {
  std::vector<MethodSpec> methods;
  for (const auto& name : config.methods) methods.push_back(parse_method(name, config.table_rho));

  // Greedy selections depend only on the fleet; compute them once.
  std::vector<std::vector<std::vector<int>>> fixed(methods.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    for (const int k : config.k_values) {
      fixed[mi].push_back(methods[mi].random ? std::vector<int>{}
                                             : run_method(methods[mi], ws, k, config.seed, config.threads).chosen);
    }
  }

  std::vector<MreCell> cells;
  for (std::size_t ki = 0; ki < config.k_values.size(); ++ki) {
    for (const auto& m : methods) cells.push_back({m.label, config.k_values[ki], 0.0, {}});
  }

  for (int i = 0; i < config.simulator.instances; ++i) {
    const auto instance = generate_instance(config, ws, i);
    const auto& truth = instance.truth.values;
    ImputationOptions opt;
    opt.rank = instance.imputation_rank;
    opt.max_iters = config.imputer.max_iters;
    opt.tol = config.imputer.tol;
    opt.seed = instance.truth.provenance.seed;
    opt.side_information_weight = config.imputer.side_information_weight;
    opt.temporal_precision = config.imputer.temporal_precision;
    opt.learn_prior_precision = config.imputer.learn_prior_precision;
    opt.side_warmup_iters = config.imputer.side_warmup_iters;

    for (std::size_t ki = 0; ki < config.k_values.size(); ++ki) {
      const int k = config.k_values[ki];
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        const auto chosen = methods[mi].random
                                ? run_method(methods[mi], ws, k, instance_seed(config.seed, 5000 + i)).chosen
                                : fixed[mi][ki];
        const auto theta = sampling_matrix(ws.tensor, chosen);
        const auto obs = ObservationSet::from_mask(truth, theta);
        double score = 100.0;
        if (obs.size() > 0) {
          const auto result = config.imputer.kind == "vbsf" ? impute_vbsf_cs(obs, ws.side_similarity, opt)
                                                            : impute_vbmc_cs(obs, ws.side_similarity, opt);
          score = mre_percent(truth, result.estimate);
        }
        auto& cell = cells[ki * methods.size() + mi];
        cell.per_instance.push_back(score);
      }
    }
    log::info("instance " + std::to_string(i + 1) + "/" + std::to_string(config.simulator.instances) + " done");
  }
  for (auto& cell : cells) {
    cell.mean_mre_percent =
        std::accumulate(cell.per_instance.begin(), cell.per_instance.end(), 0.0) /
        static_cast<double>(std::max<std::size_t>(1, cell.per_instance.size()));
  }
  return cells;
}

std::string_view to_string(CoverageLabel label) {
  switch (label) {
    case CoverageLabel::both: return "both";
    case CoverageLabel::rfl_only: return "rfl_only";
    case CoverageLabel::other_only: return "other_only";
    case CoverageLabel::neither: return "neither";
  }
  return "?";
}

std::vector<CoverageClass> coverage_classification(const SamplingMatrix& rfl,
                                                   const SamplingMatrix& other, int min_timestamps,
                                                   const LocationSet* locations) {
  if (rfl.L() != other.L() || rfl.T() != other.T()) {
    throw ArgumentError("coverage classification needs sampling matrices of the same shape");
  }
  if (locations && static_cast<int>(locations->size()) != rfl.L()) {
    throw ArgumentError("location set does not match the sampling matrices");
  }
  std::vector<CoverageClass> out;
  for (int l = 0; l < rfl.L(); ++l) {
    const bool a = rfl.row_count(l) >= min_timestamps;
    const bool b = other.row_count(l) >= min_timestamps;
    CoverageClass c;
    c.location = l;
    if (locations) {
      c.lat = locations->locations[l].lat;
      c.lon = locations->locations[l].lon;
    }
    c.label = a && b ? CoverageLabel::both
              : a    ? CoverageLabel::rfl_only
              : b    ? CoverageLabel::other_only
                     : CoverageLabel::neither;
    out.push_back(c);
  }
  return out;
}

void write_selection_table(const std::vector<SelectionRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write table: " + path.string());
  out << "method,k,PSC,PC,FLS,RFL\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.3f,%.3f,%.3f,%.3f\n", r.method.c_str(), r.k, r.psc, r.pc,
                  r.fls, r.rfl);
    out << buf;
  }
}

void write_mre_table(const std::vector<MreCell>& cells, const std::vector<int>& k_values,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write table: " + path.string());
  std::vector<std::string> methods;
  for (const auto& c : cells) {
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
  }
  out << "k";
  for (const auto& m : methods) out << ',' << m;
  out << '\n';
  char buf[64];
  for (const int k : k_values) {
    out << k;
    for (const auto& m : methods) {
      const auto it = std::find_if(cells.begin(), cells.end(),
                                   [&](const MreCell& c) { return c.k == k && c.method == m; });
      std::snprintf(buf, sizeof buf, ",%.3f", it == cells.end() ? std::nan("") : it->mean_mre_percent);
      out << buf;
    }
    out << '\n';
  }
}

void write_coverage(const std::vector<CoverageClass>& classes, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write coverage file: " + path.string());
  out << "lat,lon,label\n";
  char buf[128];
  for (const auto& c : classes) {
    std::snprintf(buf, sizeof buf, "%.7f,%.7f,", c.lat, c.lon);
    out << buf << to_string(c.label) << '\n';
  }
}

std::string digest_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return digest_hex(buf.str());
}

}  // namespace driveby
