#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace driveby {

// Seeded random source with bit-identical output on every platform.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The distribution layer is implemented here because the standard
// library distributions are implementation-defined.
//
// Streams: Rng(seed, stream) seeds the engine with splitmix64(seed ^ mix(stream)),
// so draws made under distinct stream ids are statistically independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Uniform integer on [lo, hi].
  long long between(long long lo, long long hi);
  // Box-Muller normal with the given mean and standard deviation.
  double normal(double mean = 0.0, double stddev = 1.0);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // A new generator on an independent stream derived from this seed.
  Rng split(std::uint64_t stream) const { return Rng(seed_, stream); }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Named stream ids used across the project so that each consumer of a
// top-level seed draws from its own sequence.
namespace streams {
inline constexpr std::uint64_t kSpatialCoefficients = 1;
inline constexpr std::uint64_t kTemporalCoefficients = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kInnovations = 4;
inline constexpr std::uint64_t kFleet = 5;
inline constexpr std::uint64_t kRandomBaseline = 6;
inline constexpr std::uint64_t kImputationInit = 7;
inline constexpr std::uint64_t kStopShuffle = 8;
inline constexpr std::uint64_t kStations = 9;
inline constexpr std::uint64_t kInstanceParams = 10;
}  // namespace streams

}  // namespace driveby
