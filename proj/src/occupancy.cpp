#include "driveby/occupancy.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "driveby/csv.hpp"
#include "driveby/errors.hpp"
#include "driveby/geo.hpp"
#include "driveby/rng.hpp"

namespace driveby {

namespace {

constexpr int kSecondsPerDay = 24 * 3600;

std::string at_line(const csv::Table& table, std::size_t row) {
  return table.source() + ":" + std::to_string(table.line_of(row));
}

}  // namespace

int parse_gtfs_time(const std::string& text) {
  const auto t = csv::trim(text);
  std::vector<int> parts;
  std::size_t pos = 0;
  while (true) {
    const auto colon = t.find(':', pos);
    const auto field = t.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
    if (field.empty() || field.size() > 3 ||
        !std::all_of(field.begin(), field.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw DataError("invalid time '" + t + "'");
    }
    parts.push_back(std::stoi(field));
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) throw DataError("invalid time '" + t + "'");
  const int minutes = parts[1];
  const int seconds = parts.size() == 3 ? parts[2] : 0;
  if (minutes >= 60 || seconds >= 60) throw DataError("invalid time '" + t + "'");
  return parts[0] * 3600 + minutes * 60 + seconds;
}

GtfsFeed load_gtfs(const std::filesystem::path& stops_file,
                   const std::filesystem::path& trips_file,
                   const std::filesystem::path& stop_times_file) {
  GtfsFeed feed;

  const auto stops = csv::Table::read(stops_file);
  const auto c_stop_id = stops.require_column("stop_id");
  const auto c_lat = stops.require_column("stop_lat");
  const auto c_lon = stops.require_column("stop_lon");
  std::unordered_map<std::string, std::size_t> seen_stops;
  feed.stops.reserve(stops.rows());
  for (std::size_t i = 0; i < stops.rows(); ++i) {
    const auto& row = stops.row(i);
    Stop s;
    s.id = row[c_stop_id];
    try {
      s.lat = csv::parse_double(row[c_lat], "stop_lat");
      s.lon = csv::parse_double(row[c_lon], "stop_lon");
    } catch (const DataError& e) {
      throw DataError(at_line(stops, i) + ": " + e.what());
    }
    if (s.id.empty()) throw DataError(at_line(stops, i) + ": empty stop_id");
    if (s.lat < -90 || s.lat > 90 || s.lon < -180 || s.lon > 180) {
      throw DataError(at_line(stops, i) + ": coordinates out of range for stop '" + s.id + "'");
    }
    if (!seen_stops.emplace(s.id, i).second) {
      throw DataError(at_line(stops, i) + ": duplicate stop_id '" + s.id + "'");
    }
    feed.stops.push_back(std::move(s));
  }

  const auto trips = csv::Table::read(trips_file);
  const auto c_trip_id = trips.require_column("trip_id");
  std::unordered_map<std::string, int> bus_of_trip;
  for (std::size_t i = 0; i < trips.rows(); ++i) {
    const auto& id = trips.row(i)[c_trip_id];
    if (id.empty()) throw DataError(at_line(trips, i) + ": empty trip_id");
    if (bus_of_trip.emplace(id, static_cast<int>(feed.trip_ids.size())).second) {
      feed.trip_ids.push_back(id);
    }
  }

  const auto times = csv::Table::read(stop_times_file);
  const auto c_st_trip = times.require_column("trip_id");
  const auto c_st_stop = times.require_column("stop_id");
  const auto c_arrival = times.require_column("arrival_time");
  const auto c_departure = times.find_column("departure_time");
  feed.visits.reserve(times.rows());
  for (std::size_t i = 0; i < times.rows(); ++i) {
    const auto& row = times.row(i);
    const auto it = bus_of_trip.find(row[c_st_trip]);
    if (it == bus_of_trip.end()) {
      throw DataError(at_line(times, i) + ": trip_id '" + row[c_st_trip] +
                      "' not present in " + trips.source());
    }
    // Non-timepoint rows may leave arrival_time blank; fall back to departure.
    std::string when = row[c_arrival];
    if (when.empty() && c_departure) when = row[*c_departure];
    TimedVisit v;
    v.bus = it->second;
    v.stop_id = row[c_st_stop];
    try {
      v.seconds = parse_gtfs_time(when);
    } catch (const DataError& e) {
      throw DataError(at_line(times, i) + ": " + e.what());
    }
    feed.visits.push_back(std::move(v));
  }
  return feed;
}

GtfsFeed load_gtfs_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("GTFS directory not found: " + dir.string());
  }
  return load_gtfs(dir / "stops.txt", dir / "trips.txt", dir / "stop_times.txt");
}

LocationSet subsample_stops(std::span<const Stop> stops, double d_meters,
                            std::optional<std::uint64_t> shuffle_seed) {
  if (!(d_meters > 0)) throw ArgumentError("minimum separation must be positive");
  if (stops.empty()) throw ArgumentError("cannot subsample an empty stop list");

  std::vector<std::size_t> order(stops.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_seed) {
    Rng rng(*shuffle_seed, streams::kStopShuffle);
    rng.shuffle(order);
  }

  LocationSet out;
  out.min_separation_m = d_meters;
  for (const auto i : order) {
    const auto& s = stops[i];
    const bool far_enough = std::all_of(out.locations.begin(), out.locations.end(), [&](const Stop& k) {
      return geo::haversine_m(s.lat, s.lon, k.lat, k.lon) >= d_meters;
    });
    if (far_enough) out.locations.push_back(s);
  }
  return out;
}

TimeGrid::TimeGrid(int start_seconds, int end_seconds, int slot_minutes)
    : start_(start_seconds), end_(end_seconds), slot_minutes_(slot_minutes) {
  if (slot_minutes <= 0) throw ArgumentError("slot length must be positive");
  slots_ = (end_seconds - start_seconds) / (slot_minutes * 60);
  if (slots_ < 1) throw ArgumentError("time grid must contain at least one slot");
}

TimeGrid TimeGrid::daytime() { return TimeGrid(6 * 3600, 22 * 3600, 10); }

std::optional<int> TimeGrid::slot_of(int seconds) const {
  if (seconds < start_) return std::nullopt;
  const int slot = (seconds - start_) / (slot_minutes_ * 60);
  if (slot >= slots_) return std::nullopt;
  return slot;
}

OccupancyTensor::OccupancyTensor(int L, int T, int B, std::vector<Cell> entries)
    : L_(L), T_(T), B_(B), entries_(std::move(entries)) {
  if (L < 1 || T < 1 || B < 1) throw ArgumentError("tensor dimensions must be positive");
  for (const auto& c : entries_) {
    if (c.l < 0 || c.l >= L || c.t < 0 || c.t >= T || c.b < 0 || c.b >= B) {
      throw DataError("tensor entry (" + std::to_string(c.l) + "," + std::to_string(c.t) + "," +
                      std::to_string(c.b) + ") out of range");
    }
  }
  std::sort(entries_.begin(), entries_.end());
  entries_.erase(std::unique(entries_.begin(), entries_.end()), entries_.end());

  bus_offsets_.assign(static_cast<std::size_t>(B) + 1, 0);
  for (const auto& c : entries_) ++bus_offsets_[static_cast<std::size_t>(c.b) + 1];
  std::partial_sum(bus_offsets_.begin(), bus_offsets_.end(), bus_offsets_.begin());
  bus_cells_.resize(entries_.size());
  auto cursor = bus_offsets_;
  for (const auto& c : entries_) bus_cells_[cursor[c.b]++] = BusCell{c.t, c.l};
  for (int b = 0; b < B; ++b) {
    std::sort(bus_cells_.begin() + static_cast<std::ptrdiff_t>(bus_offsets_[b]),
              bus_cells_.begin() + static_cast<std::ptrdiff_t>(bus_offsets_[b + 1]),
              [](const BusCell& x, const BusCell& y) { return x.t != y.t ? x.t < y.t : x.l < y.l; });
  }
}

std::span<const OccupancyTensor::BusCell> OccupancyTensor::bus_cells(int b) const {
  return std::span<const BusCell>(bus_cells_).subspan(bus_offsets_[b],
                                                      bus_offsets_[b + 1] - bus_offsets_[b]);
}

double OccupancyTensor::density() const {
  return static_cast<double>(entries_.size()) / (static_cast<double>(L_) * T_ * B_);
}

void OccupancyTensor::write(std::ostream& out) const {
  out << L_ << ',' << T_ << ',' << B_ << '\n';
  for (const auto& c : entries_) out << c.l << ',' << c.t << ',' << c.b << '\n';
}

void OccupancyTensor::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write tensor file: " + path.string());
  write(out);
}

OccupancyTensor OccupancyTensor::read(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto parse_triple = [&](const std::string& text) {
    const auto f = csv::split_record(text);
    if (f.size() != 3) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected 3 fields");
    }
    try {
      return std::array<long long, 3>{csv::parse_int(f[0], "index"), csv::parse_int(f[1], "index"),
                                      csv::parse_int(f[2], "index")};
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  };
  if (!std::getline(in, line)) throw DataError(source + ": empty tensor file");
  ++line_no;
  const auto dims = parse_triple(line);
  std::vector<Cell> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto v = parse_triple(line);
    cells.push_back(Cell{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])});
  }
  return OccupancyTensor(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                         static_cast<int>(dims[2]), std::move(cells));
}

OccupancyTensor OccupancyTensor::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open tensor file: " + path.string());
  return read(in, path.string());
}

OccupancyTensor build_occupancy(std::span<const TimedVisit> visits, std::span<const Stop> stops,
                                const LocationSet& locations, const TimeGrid& grid,
                                double radius_m, int bus_count) {
  if (!(radius_m > 0)) throw ArgumentError("coverage radius must be positive");
  if (locations.size() == 0) throw ArgumentError("location set is empty");

  std::unordered_map<std::string, std::size_t> stop_index;
  for (std::size_t i = 0; i < stops.size(); ++i) stop_index.emplace(stops[i].id, i);

  // Locations within the radius of each stop, computed lazily per stop.
  std::vector<std::vector<int>> near(stops.size());
  std::vector<bool> near_done(stops.size(), false);
  auto locations_near = [&](std::size_t s) -> const std::vector<int>& {
    if (!near_done[s]) {
      for (std::size_t l = 0; l < locations.size(); ++l) {
        const auto& loc = locations.locations[l];
        if (geo::haversine_m(stops[s].lat, stops[s].lon, loc.lat, loc.lon) <= radius_m) {
          near[s].push_back(static_cast<int>(l));
        }
      }
      near_done[s] = true;
    }
    return near[s];
  };

  std::vector<Cell> cells;
  for (const auto& v : visits) {
    if (v.bus < 0 || v.bus >= bus_count) {
      throw DataError("visit references bus " + std::to_string(v.bus) + " outside the fleet");
    }
    const auto it = stop_index.find(v.stop_id);
    if (it == stop_index.end()) throw DataError("visit references unknown stop '" + v.stop_id + "'");
    if (v.seconds >= kSecondsPerDay) continue;
    const auto slot = grid.slot_of(v.seconds);
    if (!slot) continue;
    for (const int l : locations_near(it->second)) cells.push_back(Cell{l, *slot, v.bus});
  }
  return OccupancyTensor(static_cast<int>(locations.size()), grid.T(), bus_count, std::move(cells));
}

std::size_t SamplingMatrix::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

int SamplingMatrix::row_count(int l) const {
  const auto row = bits_.begin() + static_cast<std::ptrdiff_t>(l) * T_;
  return static_cast<int>(std::count(row, row + T_, std::uint8_t{1}));
}

std::vector<int> SamplingMatrix::sampled_at(int t) const {
  std::vector<int> out;
  for (int l = 0; l < L_; ++l) {
    if (at(l, t)) out.push_back(l);
  }
  return out;
}

SamplingMatrix SamplingMatrix::operator|(const SamplingMatrix& other) const {
  if (L_ != other.L_ || T_ != other.T_) throw ArgumentError("sampling matrix shape mismatch");
  SamplingMatrix out(L_, T_);
  for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] | other.bits_[i];
  return out;
}

bool SamplingMatrix::covered_by(const SamplingMatrix& other) const {
  if (L_ != other.L_ || T_ != other.T_) throw ArgumentError("sampling matrix shape mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] > other.bits_[i]) return false;
  }
  return true;
}

SamplingMatrix sampling_matrix(const OccupancyTensor& tensor, std::span<const int> subset) {
  SamplingMatrix theta(tensor.L(), tensor.T());
  for (const int b : subset) {
    if (b < 0 || b >= tensor.B()) {
      throw ArgumentError("bus index " + std::to_string(b) + " out of range [0, " +
                          std::to_string(tensor.B()) + ")");
    }
    for (const auto& c : tensor.bus_cells(b)) theta.set(c.l, c.t);
  }
  return theta;
}

void write_locations(const LocationSet& locations, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write locations file: " + path.string());
  out.precision(17);
  out << "stop_id,lat,lon\n";
  for (const auto& s : locations.locations) out << csv::quote(s.id) << ',' << s.lat << ',' << s.lon << '\n';
}

LocationSet read_locations(const std::filesystem::path& path) {
  const auto table = csv::Table::read(path);
  const auto c_id = table.require_column("stop_id");
  const auto c_lat = table.require_column("lat");
  const auto c_lon = table.require_column("lon");
  LocationSet out;
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& row = table.row(i);
    out.locations.push_back(
        Stop{row[c_id], csv::parse_double(row[c_lat], "lat"), csv::parse_double(row[c_lon], "lon")});
  }
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      const auto& a = out.locations[i];
      const auto& b = out.locations[j];
      min_sep = std::min(min_sep, geo::haversine_m(a.lat, a.lon, b.lat, b.lon));
    }
  }
  out.min_separation_m = std::isfinite(min_sep) ? min_sep : 0.0;
  return out;
}

}  // namespace driveby
