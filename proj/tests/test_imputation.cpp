#include <doctest.h>

#include <sstream>

#include "driveby/errors.hpp"
#include "driveby/imputation.hpp"
#include "driveby/simgen.hpp"
#include "driveby/similarity.hpp"
#include "oracles.hpp"

using namespace driveby;

namespace {

Eigen::MatrixXd low_rank(int L, int T, int r, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd u(L, r), v(T, r);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < r; ++j) u(i, j) = rng.normal();
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < r; ++j) v(i, j) = rng.normal();
  return u * v.transpose();
}

ObservationSet sample(const Eigen::MatrixXd& y, double fraction, std::uint64_t seed,
                      const std::vector<int>& hidden_rows = {}) {
  Rng rng(seed, 50);
  std::vector<Observation> obs;
  for (int l = 0; l < y.rows(); ++l) {
    const bool hidden = std::find(hidden_rows.begin(), hidden_rows.end(), l) != hidden_rows.end();
    for (int t = 0; t < y.cols(); ++t)
      if (rng.uniform() < fraction && !hidden) obs.push_back({l, t, y(l, t)});
  }
  return ObservationSet(static_cast<int>(y.rows()), static_cast<int>(y.cols()), obs);
}

// Alternating least squares on the observed entries, from a fixed start.
Eigen::MatrixXd als_oracle(const ObservationSet& obs, int r, int iters) {
  const int L = obs.L(), T = obs.T();
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(L, r), b(T, r);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < r; ++j) b(t, j) = std::sin(1.0 + t * 0.7 + j * 1.3);
  for (int it = 0; it < iters; ++it) {
    for (int l = 0; l < L; ++l) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(r, r);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(r);
      for (const auto& o : obs.entries())
        if (o.l == l) {
          m += b.row(o.t).transpose() * b.row(o.t);
          v += o.value * b.row(o.t).transpose();
        }
      a.row(l) = m.ldlt().solve(v).transpose();
    }
    for (int t = 0; t < T; ++t) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(r, r);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(r);
      for (const auto& o : obs.entries())
        if (o.t == t) {
          m += a.row(o.l).transpose() * a.row(o.l);
          v += o.value * a.row(o.l).transpose();
        }
      b.row(t) = m.ldlt().solve(v).transpose();
    }
  }
  return a * b.transpose();
}

Eigen::MatrixXd side_matrix(int L, std::uint64_t seed) {
  Rng rng(seed, 60);
  std::vector<Stop> pts;
  for (int i = 0; i < L; ++i) pts.push_back({std::to_string(i), 28.6 + 0.1 * rng.uniform(), 77.2 + 0.1 * rng.uniform()});
  return exponential_similarity(distance_matrix(pts), kDelhiLambdaPerKm);
}

}  // namespace

TEST_CASE("mean relative error") {
  Eigen::MatrixXd truth(1, 2), est(1, 2);
  truth << 3, 4;
  est << 0, 4;
  CHECK(mre(truth, est) == doctest::Approx(0.6));
  CHECK(mre(truth, truth) == 0.0);
  CHECK(mre(truth, Eigen::MatrixXd::Zero(1, 2)) == 1.0);
  CHECK(mre_percent(truth, est) == doctest::Approx(60.0));
  CHECK_THROWS_AS(mre(Eigen::MatrixXd::Zero(1, 2), est), DegenerateInputError);
  CHECK_THROWS_AS(mre(truth, Eigen::MatrixXd::Zero(2, 1)), ArgumentError);
}

TEST_CASE("observation set") {
  const ObservationSet obs(3, 4, {{2, 1, 5.0}, {0, 3, 1.5}, {0, 0, -2.0}});
  CHECK(obs.entries().front().l == 0);
  CHECK(obs.entries().front().t == 0);
  CHECK(obs.cold_start_rows() == std::vector<int>{1});
  CHECK(obs.observed_row(2));

  std::stringstream buf;
  obs.write(buf);
  const auto back = ObservationSet::read(buf);
  REQUIRE(back.size() == 3);
  CHECK(back.entries()[2].value == 5.0);

  CHECK_THROWS_AS(ObservationSet(3, 4, {{3, 0, 1.0}}), DataError);
  CHECK_THROWS_AS(ObservationSet(3, 4, {{0, 0, 1.0}, {0, 0, 2.0}}), DataError);
  CHECK_THROWS_AS(ObservationSet(3, 4, {{0, 0, std::nan("")}}), DataError);
  std::stringstream bad("3,4\n0,0,1\n0,x,2\n");
  CHECK_THROWS_AS(ObservationSet::read(bad), DataError);

  SamplingMatrix mask(2, 2);
  mask.set(1, 0);
  Eigen::MatrixXd y(2, 2);
  y << 1, 2, 3, 4;
  const auto masked = ObservationSet::from_mask(y, mask);
  REQUIRE(masked.size() == 1);
  CHECK(masked.entries()[0].value == 3.0);
  CHECK_THROWS_AS(ObservationSet::from_mask(Eigen::MatrixXd::Zero(3, 2), mask), DataError);
}

TEST_CASE("full observation recovers a noiseless rank-3 matrix") {
  const auto y = low_rank(20, 20, 3, 1);
  const auto obs = sample(y, 1.1, 1);
  ImputationOptions opt;
  opt.rank = 3;
  opt.tol = 1e-10;
  opt.max_iters = 500;
  const auto r = impute_vbmc_cs(obs, side_matrix(20, 1), opt);
  CHECK(mre(y, r.estimate) <= 1e-6);
  CHECK(r.monotonicity_violations == 0);
}

TEST_CASE("half-sampled rank-3 completion") {
  const auto y = low_rank(30, 30, 3, 2);
  const auto obs = sample(y, 0.5, 2);
  ImputationOptions opt;
  opt.rank = 3;
  const auto r = impute_vbmc_cs(obs, side_matrix(30, 2), opt, &y);
  CHECK(mre(y, r.estimate) <= 0.01);
  CHECK(r.converged);
  CHECK(r.monotonicity_violations == 0);
  REQUIRE(r.log.back().mre.has_value());
  CHECK(*r.log.back().mre == doctest::Approx(mre(y, r.estimate)));
  CHECK(r.side_start > 1);
  for (std::size_t i = static_cast<std::size_t>(r.side_start); i < r.log.size(); ++i)
    CHECK(r.log[i].objective <= r.log[i - 1].objective + 1e-9 * std::abs(r.log[i - 1].objective));
}

TEST_CASE("agrees with plain alternating least squares") {
  const auto y = low_rank(15, 12, 2, 3);
  const auto obs = sample(y, 0.7, 3);
  ImputationOptions opt;
  opt.rank = 2;
  opt.use_side_information = false;
  opt.tol = 1e-12;
  opt.max_iters = 1000;
  const auto r = impute_vbmc_cs(obs, Eigen::MatrixXd(), opt);
  const auto als = als_oracle(obs, 2, 300);
  CHECK(mre(als, r.estimate) <= 1e-6);
}

TEST_CASE("cold-start row through side information") {
  // Location 19 sits on top of location 3, so their rows of G coincide and the
  // bandlimited truth gives them the same row. The truth spans exactly the top
  // three eigenvectors of G, which keeps G ~ A C^T consistent with the data.
  const int L = 20, T = 16;
  Rng rng(4, 61);
  std::vector<Stop> pts;
  for (int i = 0; i < L - 1; ++i) pts.push_back({std::to_string(i), 28.6 + 0.15 * rng.uniform(), 77.2 + 0.15 * rng.uniform()});
  pts.push_back(pts[3]);
  const auto G = exponential_similarity(distance_matrix(pts), kDelhiLambdaPerKm);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(T, T);
  const auto truth = simulate_factored(G, H, 3, 3, 3, 0.0, 9).values;
  REQUIRE((truth.row(19) - truth.row(3)).norm() <= 1e-9 * truth.norm());

  const auto obs = sample(truth, 0.6, 4, {19});
  REQUIRE(obs.cold_start_rows() == std::vector<int>{19});
  for (const bool learn : {false, true}) {
    ImputationOptions opt;
    opt.rank = 3;
    opt.learn_prior_precision = learn;
    const auto r = impute_vbmc_cs(obs, G, opt);
    const double row_error = (r.estimate.row(19) - truth.row(3)).norm() / truth.row(3).norm();
    MESSAGE("cold-start row error " << row_error << std::string(learn ? " (learned prior)" : ""));
    CHECK(row_error <= 0.05);
    CHECK(r.estimate.row(19).allFinite());
  }
}

TEST_CASE("temporal smoothing") {
  SUBCASE("zero transition reduces to the ridge") {
    const auto y = low_rank(12, 10, 2, 5);
    const auto obs = sample(y, 0.6, 5);
    const auto G = side_matrix(12, 5);
    for (const bool learn : {false, true}) {
      ImputationOptions sf;
      sf.rank = 2;
      sf.tol = 1e-12;
      sf.max_iters = 300;
      sf.learn_prior_precision = learn;
      sf.fixed_transition = Eigen::MatrixXd::Zero(2, 2);
      sf.temporal_precision = 0.7;
      auto mc = sf;
      mc.fixed_transition.reset();
      if (!learn) mc.extra_time_ridge = 0.7;
      const auto a = impute_vbsf_cs(obs, G, sf);
      const auto b = impute_vbmc_cs(obs, G, mc);
      CHECK(mre(b.estimate, a.estimate) <= 1e-6);
    }
  }
  SUBCASE("temporally constant truth at 30% sampling") {
    const int L = 25, T = 20;
    Rng rng(6);
    Eigen::VectorXd level(L);
    for (int l = 0; l < L; ++l) level[l] = 1.0 + rng.uniform();
    const Eigen::MatrixXd y = level * Eigen::RowVectorXd::Ones(T);
    const auto obs = sample(y, 0.3, 6);
    ImputationOptions opt;
    opt.rank = 1;
    const auto r = impute_vbsf_cs(obs, side_matrix(L, 6), opt);
    CHECK(mre(y, r.estimate) <= 0.02);
    CHECK(r.factors.F.rows() == 1);
    CHECK(r.monotonicity_violations == 0);
  }
  SUBCASE("learned precisions stay monotone on AR data") {
    const auto G = side_matrix(20, 7);
    const auto y = simulate_ar(G, 4, 20, 1.0, 15, 0.001, 7).values;
    const auto obs = sample(y, 0.3, 7);
    ImputationOptions opt;
    opt.rank = 4;
    opt.learn_prior_precision = true;
    const auto r = impute_vbsf_cs(obs, G, opt);
    CHECK(r.monotonicity_violations == 0);
    CHECK(r.estimate.allFinite());
  }
}

TEST_CASE("imputation determinism and errors") {
  const auto y = low_rank(10, 8, 2, 8);
  const auto obs = sample(y, 0.5, 8);
  const auto G = side_matrix(10, 8);
  ImputationOptions opt;
  opt.rank = 2;
  opt.seed = 3;
  CHECK(impute_vbmc_cs(obs, G, opt).estimate == impute_vbmc_cs(obs, G, opt).estimate);
  CHECK(impute_vbsf_cs(obs, G, opt).estimate == impute_vbsf_cs(obs, G, opt).estimate);

  opt.rank = 9;
  CHECK_THROWS_AS(impute_vbmc_cs(obs, G, opt), ArgumentError);
  opt.rank = 0;
  CHECK_THROWS_AS(impute_vbmc_cs(obs, G, opt), ArgumentError);
  opt.rank = 2;
  CHECK_THROWS_AS(impute_vbmc_cs(ObservationSet(10, 8, {}), G, opt), DegenerateInputError);
  CHECK_THROWS_AS(impute_vbmc_cs(obs, Eigen::MatrixXd::Identity(9, 9), opt), DataError);
  opt.fixed_transition = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(impute_vbsf_cs(obs, G, opt), ArgumentError);
}

TEST_CASE("convergence log file") {
  const auto y = low_rank(8, 8, 2, 9);
  ImputationOptions opt;
  opt.rank = 2;
  const auto r = impute_vbmc_cs(sample(y, 0.6, 9), side_matrix(8, 9), opt, &y);
  const auto dir = oracle::temp_dir("convergence");
  write_convergence_log(r.log, dir / "log.csv");
  std::ifstream in(dir / "log.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,objective,relative_change,mre");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == static_cast<int>(r.log.size()));
}
