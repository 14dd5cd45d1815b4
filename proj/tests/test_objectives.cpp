#include <doctest.h>

#include "driveby/errors.hpp"
#include "driveby/objectives.hpp"
#include "oracles.hpp"

using namespace driveby;

namespace {

std::vector<int> all_buses(int B) {
  std::vector<int> v(B);
  for (int b = 0; b < B; ++b) v[b] = b;
  return v;
}

}  // namespace

TEST_CASE("pc and psc by direct count") {
  // 5 entries in a 4 x 3 grid.
  const OccupancyTensor t(4, 3, 2, {{0, 0, 0}, {1, 1, 0}, {1, 2, 0}, {3, 0, 1}, {3, 2, 1}});
  const std::vector<int> both{0, 1}, none{};
  CHECK(pc_gain(t, both).value == doctest::Approx(100.0 * 5 / 12));
  CHECK(pc_gain(t, none).value == 0.0);
  CHECK(psc_gain(t, none).value == 0.0);
  CHECK(psc_gain(t, both).value == doctest::Approx(75.0));

  // 2 of 5 locations covered.
  const OccupancyTensor five(5, 2, 1, {{1, 0, 0}, {1, 1, 0}, {4, 1, 0}});
  const std::vector<int> zero{0};
  CHECK(psc_gain(five, zero).value == doctest::Approx(40.0));

  std::vector<Cell> full;
  for (int l = 0; l < 3; ++l)
    for (int tt = 0; tt < 2; ++tt) full.push_back({l, tt, 0});
  const OccupancyTensor all(3, 2, 1, full);
  CHECK(pc_gain(all, zero).value == 100.0);
  CHECK(psc_gain(all, zero).value == 100.0);
  CHECK(fls_gain(all, zero, Eigen::MatrixXd::Identity(3, 3)).value == 1.0);
}

TEST_CASE("fls hand example") {
  Eigen::MatrixXd S(2, 2);
  S << 1, 0.5, 0.5, 1;
  const OccupancyTensor t(2, 1, 1, {{0, 0, 0}});
  const std::vector<int> zero{0}, none{};
  CHECK(fls_gain(t, zero, S).value == doctest::Approx(0.75));
  CHECK(fls_gain(t, none, S).value == 0.0);
}

TEST_CASE("flst and rfl hand example") {
  Eigen::MatrixXd S(2, 2);
  S << 1, 0.5, 0.5, 1;
  // Location 1 sampled only at the first timestamp.
  const OccupancyTensor t(2, 2, 1, {{0, 0, 0}});
  const std::vector<int> zero{0};
  CHECK(flst_gain_reference(t, zero, S, 0.5).value == doctest::Approx(0.5625));
  CHECK(rfl_gain(t, zero, S, 0.5).value == doctest::Approx(0.5625));
  const std::vector<int> none{};
  CHECK(flst_gain_reference(t, none, S, 0.5).value == 0.0);
  CHECK(rfl_gain(t, none, S, 0.5).value == 0.0);
}

TEST_CASE("rho = 1 keeps the peak forever") {
  const OccupancyTensor t(1, 6, 1, {{0, 2, 0}});
  const std::vector<int> zero{0};
  const auto pi = rfl_facility_values(t, zero, Eigen::MatrixXd::Ones(1, 1), 1.0);
  CHECK(pi(0, 0) == 0.0);
  CHECK(pi(0, 1) == 0.0);
  for (int tt = 2; tt < 6; ++tt) CHECK(pi(0, tt) == 1.0);
}

TEST_CASE("gains agree with dense oracles on random instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = oracle::random_tensor(7, 6, 5, 0.12, seed);
    const auto S = oracle::random_similarity(7, seed);
    const oracle::Dense d(t);
    const std::vector<std::vector<int>> subsets{{}, {0}, {1, 3}, {0, 2, 4}, all_buses(5)};
    for (const auto& m : subsets) {
      CHECK(pc_gain(t, m).value == doctest::Approx(oracle::pc(d, m)).epsilon(1e-12));
      CHECK(psc_gain(t, m).value == doctest::Approx(oracle::psc(d, m)).epsilon(1e-12));
      CHECK(fls_gain(t, m, S).value == doctest::Approx(oracle::fls(d, m, S)).epsilon(1e-12));
      for (double rho : {0.0, 0.5, 0.98, 1.0}) {
        const double ref = oracle::flst(d, m, S, rho);
        CHECK(std::abs(flst_gain_reference(t, m, S, rho).value - ref) <= 1e-12);
        CHECK(std::abs(rfl_gain(t, m, S, rho).value - ref) <= 1e-12);
      }
      CHECK(rfl_gain(t, m, S, 0.0).value == fls_gain(t, m, S).value);
      CHECK(flst_gain_reference(t, m, S, 0.0).value == doctest::Approx(fls_gain(t, m, S).value).epsilon(1e-15));
    }
  }
}

TEST_CASE("set function incremental gains") {
  const auto t = oracle::random_tensor(8, 6, 6, 0.15, 42);
  const auto S = oracle::random_similarity(8, 42);

  for (const auto kind : {ObjectiveKind::pc, ObjectiveKind::psc, ObjectiveKind::fls, ObjectiveKind::flst,
                          ObjectiveKind::rfl}) {
    CAPTURE(to_string(kind));
    const SetFunction f(t, kind, &S, 0.9);
    auto state = f.initial_state();
    std::vector<int> members;
    for (int bus : {3, 0, 5, 1}) {
      const double before = f(members);
      auto with = members;
      with.push_back(bus);
      const double gain = f.incremental_gain(state, bus);
      const auto copy = state.value;
      CHECK(state.value == copy);  // incremental_gain does not mutate
      CHECK(gain == doctest::Approx(f(with) - before).epsilon(1e-12));
      f.commit(state, bus);
      members = with;
      CHECK(state.value == f(members));
    }
    // A bus already in the set adds nothing.
    CHECK(f.incremental_gain(state, 3) == 0.0);
  }

  SUBCASE("singleton from empty equals rfl_gain") {
    const SetFunction f(t, ObjectiveKind::rfl, &S, 0.98);
    const auto state = f.initial_state();
    for (int b = 0; b < 6; ++b) {
      const std::vector<int> one{b};
      CHECK(f.incremental_gain(state, b) == rfl_gain(t, one, S, 0.98).value);
    }
  }
  SUBCASE("exact match with recompute on a 6 bus instance") {
    const SetFunction f(t, ObjectiveKind::rfl, &S, 0.98);
    auto state = f.initial_state();
    f.commit(state, 2);
    f.commit(state, 4);
    for (int e : {0, 1, 3, 5}) {
      const std::vector<int> base{2, 4}, with{2, 4, e};
      CHECK(f.incremental_gain(state, e) == rfl_gain(t, with, S, 0.98).value - rfl_gain(t, base, S, 0.98).value);
    }
  }
  SUBCASE("saturated rho = 0 candidate adds nothing") {
    const OccupancyTensor dup(2, 2, 2, {{0, 0, 0}, {1, 1, 0}, {0, 0, 1}});
    const auto S2 = oracle::random_similarity(2, 1);
    const SetFunction f(dup, ObjectiveKind::rfl, &S2, 0.0);
    auto state = f.initial_state();
    f.commit(state, 0);
    CHECK(f.incremental_gain(state, 1) == 0.0);
  }
  SUBCASE("fls ignores rho") {
    const SetFunction f(t, ObjectiveKind::fls, &S, 0.7);
    CHECK(f.rho() == 0.0);
  }
}

TEST_CASE("objective names and argument checks") {
  for (const auto kind : {ObjectiveKind::pc, ObjectiveKind::psc, ObjectiveKind::fls, ObjectiveKind::flst,
                          ObjectiveKind::rfl})
    CHECK(objective_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(objective_from_string("nope"), ArgumentError);

  const auto t = oracle::random_tensor(3, 3, 2, 0.3, 1);
  CHECK_THROWS_AS(SetFunction(t, ObjectiveKind::rfl, nullptr, 0.5), ArgumentError);
  const auto S = oracle::random_similarity(3, 1);
  CHECK_THROWS_AS(SetFunction(t, ObjectiveKind::rfl, &S, 1.5), ArgumentError);
  const Eigen::MatrixXd wrong = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(SetFunction(t, ObjectiveKind::fls, &wrong, 0.0), ArgumentError);
}
