#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace driveby {

struct Stop {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
};

// One scheduled arrival of a bus (GTFS trip) at a stop.
struct TimedVisit {
  int bus = 0;  // index into GtfsFeed::trip_ids
  std::string stop_id;
  int seconds = 0;  // since midnight; may exceed 24h per GTFS convention
};

struct GtfsFeed {
  std::vector<Stop> stops;
  std::vector<std::string> trip_ids;  // bus b is trip_ids[b]
  std::vector<TimedVisit> visits;
};

// Reads the stops/trips/stop_times subset of a GTFS feed. Rows that fail to
// parse raise DataError with file and line; nothing is skipped silently.
GtfsFeed load_gtfs(const std::filesystem::path& stops_file,
                   const std::filesystem::path& trips_file,
                   const std::filesystem::path& stop_times_file);
GtfsFeed load_gtfs_dir(const std::filesystem::path& dir);

// Parses "H:MM:SS" or "HH:MM" into seconds since midnight.
int parse_gtfs_time(const std::string& text);

// Canonical location universe. Index i is location id i everywhere downstream.
struct LocationSet {
  std::vector<Stop> locations;
  double min_separation_m = 0.0;

  std::size_t size() const { return locations.size(); }
};

// Greedy filter in input order (or a seeded shuffle of it): a stop is kept
// iff it is at least d meters from every stop kept before it.
LocationSet subsample_stops(std::span<const Stop> stops, double d_meters,
                            std::optional<std::uint64_t> shuffle_seed = std::nullopt);

// Half-open slots [start + t*slot, start + (t+1)*slot) for t in [0, T).
class TimeGrid {
 public:
  TimeGrid(int start_seconds, int end_seconds, int slot_minutes);
  static TimeGrid daytime();  // 06:00 to 22:00 in 10 minute slots, T = 96

  int start_seconds() const { return start_; }
  int end_seconds() const { return end_; }
  int slot_minutes() const { return slot_minutes_; }
  int T() const { return slots_; }
  std::optional<int> slot_of(int seconds) const;

 private:
  int start_;
  int end_;
  int slot_minutes_;
  int slots_;
};

struct Cell {
  int l = 0;
  int t = 0;
  int b = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Sparse binary L x T x B tensor. Entries are kept sorted by (l, t, b) and
// deduplicated; a per-bus index of (t, l) pairs backs the set functions.
class OccupancyTensor {
 public:
  struct BusCell {
    int t;
    int l;
  };

  OccupancyTensor(int L, int T, int B, std::vector<Cell> entries);

  int L() const { return L_; }
  int T() const { return T_; }
  int B() const { return B_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Cell>& entries() const { return entries_; }
  // Cells of bus b ordered by (t, l).
  std::span<const BusCell> bus_cells(int b) const;
  double density() const;

  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
  static OccupancyTensor read(std::istream& in, const std::string& source = "<stream>");
  static OccupancyTensor read(const std::filesystem::path& path);

  friend bool operator==(const OccupancyTensor& a, const OccupancyTensor& b) {
    return a.L_ == b.L_ && a.T_ == b.T_ && a.B_ == b.B_ && a.entries_ == b.entries_;
  }

 private:
  int L_;
  int T_;
  int B_;
  std::vector<Cell> entries_;
  std::vector<std::size_t> bus_offsets_;
  std::vector<BusCell> bus_cells_;
};

// Entry (l, t, b) is set iff some visit of bus b falls in slot t at a stop
// within radius_m of location l. Visits outside the grid or at or after 24:00
// are dropped.
OccupancyTensor build_occupancy(std::span<const TimedVisit> visits, std::span<const Stop> stops,
                                const LocationSet& locations, const TimeGrid& grid,
                                double radius_m, int bus_count);

class SamplingMatrix {
 public:
  SamplingMatrix(int L, int T) : L_(L), T_(T), bits_(static_cast<std::size_t>(L) * T, 0) {}

  int L() const { return L_; }
  int T() const { return T_; }
  bool at(int l, int t) const { return bits_[static_cast<std::size_t>(l) * T_ + t] != 0; }
  void set(int l, int t) { bits_[static_cast<std::size_t>(l) * T_ + t] = 1; }
  std::size_t count() const;
  // Number of sampled timestamps of location l.
  int row_count(int l) const;
  // Locations sampled at slot t, ascending.
  std::vector<int> sampled_at(int t) const;
  // Elementwise OR.
  SamplingMatrix operator|(const SamplingMatrix& other) const;
  // Elementwise a <= b.
  bool covered_by(const SamplingMatrix& other) const;

  friend bool operator==(const SamplingMatrix&, const SamplingMatrix&) = default;

 private:
  int L_;
  int T_;
  std::vector<std::uint8_t> bits_;
};

// Logical OR of the bus slices in `subset`. Throws ArgumentError on an
// out-of-range bus.
SamplingMatrix sampling_matrix(const OccupancyTensor& tensor, std::span<const int> subset);

void write_locations(const LocationSet& locations, const std::filesystem::path& path);
LocationSet read_locations(const std::filesystem::path& path);

}  // namespace driveby
