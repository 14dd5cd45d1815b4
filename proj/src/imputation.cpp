#include "driveby/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "driveby/csv.hpp"
#include "driveby/errors.hpp"
#include "driveby/log.hpp"
#include "driveby/rng.hpp"

namespace driveby {

ObservationSet::ObservationSet(int L, int T, std::vector<Observation> entries)
    : L_(L), T_(T), entries_(std::move(entries)), row_counts_(static_cast<std::size_t>(std::max(L, 0)), 0) {
  if (L < 1 || T < 1) throw ArgumentError("observation grid dimensions must be positive");
  for (const auto& o : entries_) {
    if (o.l < 0 || o.l >= L || o.t < 0 || o.t >= T) {
      throw DataError("observation (" + std::to_string(o.l) + "," + std::to_string(o.t) +
                      ") outside the " + std::to_string(L) + "x" + std::to_string(T) + " grid");
    }
    if (!std::isfinite(o.value)) throw DataError("observation value is not finite");
  }
  std::sort(entries_.begin(), entries_.end(),
            [](const Observation& a, const Observation& b) { return a.l != b.l ? a.l < b.l : a.t < b.t; });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].l == entries_[i - 1].l && entries_[i].t == entries_[i - 1].t) {
      throw DataError("duplicate observation at (" + std::to_string(entries_[i].l) + "," +
                      std::to_string(entries_[i].t) + ")");
    }
  }
  for (const auto& o : entries_) ++row_counts_[o.l];
}

ObservationSet ObservationSet::from_mask(const Eigen::MatrixXd& truth, const SamplingMatrix& mask) {
  if (truth.rows() != mask.L() || truth.cols() != mask.T()) {
    throw DataError("mask is " + std::to_string(mask.L()) + "x" + std::to_string(mask.T()) +
                    " but the matrix is " + std::to_string(truth.rows()) + "x" +
                    std::to_string(truth.cols()));
  }
  std::vector<Observation> entries;
  for (int l = 0; l < mask.L(); ++l) {
    for (int t = 0; t < mask.T(); ++t) {
      if (mask.at(l, t)) entries.push_back({l, t, truth(l, t)});
    }
  }
  return ObservationSet(mask.L(), mask.T(), std::move(entries));
}

std::vector<int> ObservationSet::cold_start_rows() const {
  std::vector<int> rows;
  for (int l = 0; l < L_; ++l) {
    if (row_counts_[l] == 0) rows.push_back(l);
  }
  return rows;
}

void ObservationSet::write(std::ostream& out) const {
  out << L_ << ',' << T_ << '\n';
  char buf[32];
  for (const auto& o : entries_) {
    std::snprintf(buf, sizeof buf, "%.17g", o.value);
    out << o.l << ',' << o.t << ',' << buf << '\n';
  }
}

void ObservationSet::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write observation file: " + path.string());
  write(out);
}

ObservationSet ObservationSet::read(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty observation file");
  const auto dims = csv::split_record(line);
  if (dims.size() != 2) throw DataError(source + ":1: expected 'L,T' header");
  const auto L = static_cast<int>(csv::parse_int(dims[0], "L"));
  const auto T = static_cast<int>(csv::parse_int(dims[1], "T"));
  std::vector<Observation> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split_record(line);
    try {
      if (f.size() != 3) throw DataError("expected l,t,value");
      entries.push_back({static_cast<int>(csv::parse_int(f[0], "l")),
                         static_cast<int>(csv::parse_int(f[1], "t")), csv::parse_double(f[2], "value")});
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ObservationSet(L, T, std::move(entries));
}

ObservationSet ObservationSet::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open observation file: " + path.string());
  return read(in, path.string());
}

double mre(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols()) {
    throw ArgumentError("MRE needs matrices of the same shape");
  }
  const double norm = truth.norm();
  if (!(norm > 0)) throw DegenerateInputError("MRE undefined for an all-zero truth matrix");
  return (truth - estimate).norm() / norm;
}

void write_convergence_log(const std::vector<IterationRecord>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write convergence log: " + path.string());
  out << "iteration,objective,relative_change,mre\n";
  char buf[128];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.6g,", r.iteration, r.objective, r.relative_change);
    out << buf;
    if (r.mre) {
      std::snprintf(buf, sizeof buf, "%.9g", *r.mre);
      out << buf;
    }
    out << '\n';
  }
}

namespace {

constexpr double kMinPrecision = 1e-8;
constexpr double kMaxPrecision = 1e12;

// Inverse and log-determinant of an SPD matrix, retrying with diagonal jitter.
struct SpdInverse {
  Eigen::MatrixXd inverse;
  double log_det = 0.0;
};

SpdInverse invert_spd(const Eigen::MatrixXd& m) {
  const auto r = m.rows();
  const double scale = std::max(1e-300, m.diagonal().cwiseAbs().maxCoeff());
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(m + jitter * Eigen::MatrixXd::Identity(r, r));
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd l = llt.matrixL();
      if (l.diagonal().minCoeff() > 0 && std::isfinite(l.diagonal().maxCoeff())) {
        SpdInverse out;
        out.inverse = llt.solve(Eigen::MatrixXd::Identity(r, r));
        out.inverse = 0.5 * (out.inverse + out.inverse.transpose());
        out.log_det = 2.0 * l.diagonal().array().log().sum();
        return out;
      }
    }
    jitter = jitter == 0.0 ? 1e-12 * scale : jitter * 100.0;
    log::debug("normal equations not positive definite; retrying with ridge jitter " +
               std::to_string(jitter));
  }
  throw NumericalError("normal equations are singular even after ridge jitter");
}

class Solver {
 public:
  Solver(const ObservationSet& obs, const Eigen::MatrixXd& g, const ImputationOptions& opt,
         bool temporal)
      : obs_(obs), g_(g), opt_(opt), temporal_(temporal), L_(obs.L()), T_(obs.T()), r_(opt.rank) {
    if (r_ < 1) throw ArgumentError("rank must be at least 1");
    if (r_ > std::min(L_, T_)) {
      throw ArgumentError("rank " + std::to_string(r_) + " exceeds min(L, T) = " +
                          std::to_string(std::min(L_, T_)));
    }
    if (opt_.max_iters < 1) throw ArgumentError("max_iters must be at least 1");
    if (opt_.use_side_information && (g.rows() != L_ || g.cols() != L_)) {
      throw DataError("side-information matrix is " + std::to_string(g.rows()) + "x" +
                      std::to_string(g.cols()) + " but the observations have L=" + std::to_string(L_));
    }
    if (obs.size() < static_cast<std::size_t>(r_)) {
      log::warn("only " + std::to_string(obs.size()) + " observations for rank " + std::to_string(r_));
    }
    if (obs.size() == 0) throw DegenerateInputError("no observations to impute from");

    by_row_.resize(L_);
    by_col_.resize(T_);
    for (const auto& o : obs.entries()) {
      by_row_[o.l].push_back({o.t, o.value});
      by_col_[o.t].push_back({o.l, o.value});
    }
    gamma_A_ = gamma_B_ = gamma_C_ = opt_.gamma;
    alpha_ = opt_.temporal_precision;
    // With learned precisions the temporal chain is the whole prior on B.
    if (state_space_prior()) gamma_B_ = 0.0;
    side_count_ = opt_.side_information_weight * static_cast<double>(L_) * L_;
    initialize();
  }

  ImputationResult run(const Eigen::MatrixXd* truth) {
    ImputationResult result;
    Eigen::MatrixXd previous = f_.A * f_.B.transpose();
    double previous_objective = std::numeric_limits<double>::infinity();
    side_on_ = opt_.side_warmup_iters <= 0;
    for (int it = 1; it <= opt_.max_iters; ++it) {
      if (!side_on_ && (it > opt_.side_warmup_iters || warm_)) {
        // The objective gains the G terms here, so monotonicity restarts.
        side_on_ = true;
        result.side_start = it;
        previous_objective = std::numeric_limits<double>::infinity();
      }
      update_A();
      if (side()) update_C();
      update_B();
      if (temporal_ && !opt_.fixed_transition) update_F();
      update_beta();
      if (side()) update_beta_side();
      if (opt_.learn_prior_precision) update_gamma();

      const double objective = free_energy();
      Eigen::MatrixXd current = f_.A * f_.B.transpose();
      const double denom = std::max(previous.norm(), 1e-300);
      IterationRecord rec;
      rec.iteration = it;
      rec.objective = objective;
      rec.relative_change = (current - previous).norm() / denom;
      if (truth) rec.mre = mre(*truth, current);
      result.log.push_back(rec);

      if (objective > previous_objective + 1e-9 * std::max(1.0, std::abs(previous_objective))) {
        ++result.monotonicity_violations;
        log::warn("free energy increased at iteration " + std::to_string(it));
      }
      previous_objective = objective;
      previous = std::move(current);
      if (rec.relative_change <= opt_.tol) {
        if (opt_.use_side_information && !side_on_) {
          warm_ = true;
          continue;
        }
        result.converged = true;
        break;
      }
    }
    result.estimate = previous;
    result.factors = f_;
    return result;
  }

 private:
  struct Entry {
    int index;
    double value;
  };

  bool side() const { return opt_.use_side_information && side_on_; }
  bool state_space_prior() const { return temporal_ && opt_.learn_prior_precision; }

  void initialize() {
    Rng rng(opt_.seed, streams::kImputationInit);
    auto draw = [&](Eigen::Index rows) {
      Eigen::MatrixXd m(rows, r_);
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal(0.0, 0.1);
      }
      return m;
    };
    f_.A = draw(L_);
    f_.B = draw(T_);
    f_.C = opt_.use_side_information ? draw(L_) : Eigen::MatrixXd::Zero(L_, r_);
    f_.F = opt_.fixed_transition ? *opt_.fixed_transition : Eigen::MatrixXd::Identity(r_, r_);
    if (f_.F.rows() != r_ || f_.F.cols() != r_) throw ArgumentError("transition must be r x r");
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(r_, r_);
    f_.cov_A.assign(static_cast<std::size_t>(L_), zero);
    f_.cov_B.assign(static_cast<std::size_t>(T_), zero);
    f_.cov_C = zero;
    log_det_A_.assign(static_cast<std::size_t>(L_), 0.0);
    log_det_B_.assign(static_cast<std::size_t>(T_), 0.0);

    double sq = 0.0;
    for (const auto& o : obs_.entries()) sq += o.value * o.value;
    f_.beta = std::clamp(sq > 0 ? static_cast<double>(obs_.size()) / sq : 1.0, kMinPrecision, kMaxPrecision);
    f_.beta_side = opt_.use_side_information ? std::clamp(side_count_ / std::max(g_.squaredNorm(), 1e-300), kMinPrecision,
                                       kMaxPrecision)
                          : 0.0;
  }

  Eigen::MatrixXd identity() const { return Eigen::MatrixXd::Identity(r_, r_); }

  void update_A() {
    Eigen::MatrixXd side_precision = Eigen::MatrixXd::Zero(r_, r_);
    if (side()) {
      side_precision = f_.beta_side * (f_.C.transpose() * f_.C + static_cast<double>(L_) * f_.cov_C);
    }
    for (int i = 0; i < L_; ++i) {
      Eigen::MatrixXd precision = gamma_A_ * identity() + side_precision;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r_);
      for (const auto& [t, y] : by_row_[i]) {
        const auto b = f_.B.row(t).transpose();
        precision += f_.beta * (b * b.transpose() + f_.cov_B[t]);
        rhs += f_.beta * y * b;
      }
      if (side()) rhs += f_.beta_side * (f_.C.transpose() * g_.row(i).transpose());
      const auto inv = invert_spd(precision);
      f_.cov_A[i] = inv.inverse;
      log_det_A_[i] = -inv.log_det;
      f_.A.row(i) = (inv.inverse * rhs).transpose();
    }
  }

  void update_C() {
    Eigen::MatrixXd expected_ata = f_.A.transpose() * f_.A;
    for (const auto& cov : f_.cov_A) expected_ata += cov;
    const auto inv = invert_spd(f_.beta_side * expected_ata + gamma_C_ * identity());
    f_.cov_C = inv.inverse;
    log_det_C_ = -inv.log_det;
    f_.C = f_.beta_side * (g_.transpose() * f_.A) * f_.cov_C;
  }

  void update_B_row(int t) {
    Eigen::MatrixXd precision = (gamma_B_ + opt_.extra_time_ridge) * identity();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(r_);
    for (const auto& [l, y] : by_col_[t]) {
      const auto a = f_.A.row(l).transpose();
      precision += f_.beta * (a * a.transpose() + f_.cov_A[l]);
      rhs += f_.beta * y * a;
    }
    if (temporal_) {
      const double alpha = alpha_;
      precision += alpha * identity();
      if (t > 0) rhs += alpha * f_.F * f_.B.row(t - 1).transpose();
      if (t + 1 < T_) {
        precision += alpha * f_.F.transpose() * f_.F;
        rhs += alpha * f_.F.transpose() * f_.B.row(t + 1).transpose();
      }
    }
    const auto inv = invert_spd(precision);
    f_.cov_B[t] = inv.inverse;
    log_det_B_[t] = -inv.log_det;
    f_.B.row(t) = (inv.inverse * rhs).transpose();
  }

  void update_B() {
    for (int t = 0; t < T_; ++t) update_B_row(t);
    if (temporal_) {
      for (int t = T_ - 1; t >= 0; --t) update_B_row(t);
    }
  }

  void update_F() {
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(r_, r_);
    Eigen::MatrixXd auto_cov = Eigen::MatrixXd::Zero(r_, r_);
    for (int t = 1; t < T_; ++t) {
      cross += f_.B.row(t).transpose() * f_.B.row(t - 1);
      auto_cov += f_.B.row(t - 1).transpose() * f_.B.row(t - 1) + f_.cov_B[t - 1];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(auto_cov);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0)) return;
    // F = cross * auto_cov^{-1}
    f_.F = ldlt.solve(cross.transpose()).transpose();
  }

  double expected_data_error() const {
    double total = 0.0;
    for (const auto& o : obs_.entries()) {
      const auto a = f_.A.row(o.l).transpose();
      const auto b = f_.B.row(o.t).transpose();
      const double resid = o.value - a.dot(b);
      total += resid * resid + a.dot(f_.cov_B[o.t] * a) + b.dot(f_.cov_A[o.l] * b) +
               (f_.cov_A[o.l].cwiseProduct(f_.cov_B[o.t])).sum();
    }
    return total;
  }

  double expected_side_error() const {
    const Eigen::MatrixXd ctc = f_.C.transpose() * f_.C;
    double total = (g_ - f_.A * f_.C.transpose()).squaredNorm();
    for (int i = 0; i < L_; ++i) {
      const auto a = f_.A.row(i).transpose();
      total += static_cast<double>(L_) * a.dot(f_.cov_C * a) + f_.cov_A[i].cwiseProduct(ctc).sum() +
               static_cast<double>(L_) * f_.cov_A[i].cwiseProduct(f_.cov_C).sum();
    }
    return total;
  }

  double expected_temporal_error() const {
    double total = 0.0;
    for (int t = 0; t < T_; ++t) {
      Eigen::VectorXd diff = f_.B.row(t).transpose();
      total += f_.cov_B[t].trace();
      if (t > 0) {
        diff -= f_.F * f_.B.row(t - 1).transpose();
        total += (f_.F * f_.cov_B[t - 1] * f_.F.transpose()).trace();
      }
      total += diff.squaredNorm();
    }
    return total;
  }

  void update_beta() {
    f_.beta = std::clamp(static_cast<double>(obs_.size()) / std::max(expected_data_error(), 1e-300),
                         kMinPrecision, kMaxPrecision);
  }

  double expected_sq_A() const {
    double total = f_.A.squaredNorm();
    for (const auto& cov : f_.cov_A) total += cov.trace();
    return total;
  }

  double expected_sq_B() const {
    double total = f_.B.squaredNorm();
    for (const auto& cov : f_.cov_B) total += cov.trace();
    return total;
  }

  double expected_sq_C() const { return f_.C.squaredNorm() + static_cast<double>(L_) * f_.cov_C.trace(); }

  void update_gamma() {
    auto fit = [&](int rows, double sq) {
      return std::clamp(static_cast<double>(rows) * r_ / std::max(sq, 1e-300), kMinPrecision, kMaxPrecision);
    };
    gamma_A_ = fit(L_, expected_sq_A());
    if (side()) gamma_C_ = fit(L_, expected_sq_C());
    if (state_space_prior()) {
      alpha_ = fit(T_, expected_temporal_error());
    } else {
      gamma_B_ = fit(T_, expected_sq_B());
    }
  }

  void update_beta_side() {
    f_.beta_side = std::clamp(side_count_ / std::max(expected_side_error(), 1e-300), kMinPrecision,
                              kMaxPrecision);
  }

  // Negative evidence lower bound up to constants. Every update above is an
  // exact coordinate minimizer of this quantity.
  double free_energy() const {
    const double n = static_cast<double>(obs_.size());
    double fe = 0.5 * f_.beta * expected_data_error() - 0.5 * n * std::log(f_.beta);

    fe += 0.5 * gamma_A_ * expected_sq_A() + 0.5 * (gamma_B_ + opt_.extra_time_ridge) * expected_sq_B();
    fe -= 0.5 * r_ * L_ * std::log(gamma_A_);
    if (gamma_B_ > 0) fe -= 0.5 * r_ * T_ * std::log(gamma_B_);

    for (const double ld : log_det_A_) fe -= 0.5 * ld;
    for (const double ld : log_det_B_) fe -= 0.5 * ld;

    if (side()) {
      fe += 0.5 * f_.beta_side * expected_side_error() - 0.5 * side_count_ * std::log(f_.beta_side);
      fe += 0.5 * gamma_C_ * expected_sq_C() - 0.5 * r_ * L_ * std::log(gamma_C_);
      fe -= 0.5 * static_cast<double>(L_) * log_det_C_;
    }
    if (temporal_) fe += 0.5 * alpha_ * expected_temporal_error() - 0.5 * r_ * T_ * std::log(alpha_);
    return fe;
  }

  const ObservationSet& obs_;
  const Eigen::MatrixXd& g_;
  ImputationOptions opt_;
  bool temporal_;
  int L_, T_, r_;
  double side_count_ = 0.0;
  bool side_on_ = true;
  bool warm_ = false;  // data-only phase has converged
  double gamma_A_, gamma_B_, gamma_C_;  // prior precisions of the factor rows
  double alpha_;                        // precision of the temporal evolution term
  std::vector<std::vector<Entry>> by_row_;
  std::vector<std::vector<Entry>> by_col_;
  CompletionFactors f_;
  std::vector<double> log_det_A_;  // log det of each row covariance
  std::vector<double> log_det_B_;
  double log_det_C_ = 0.0;
};

// Runs the plain start and, when enabled, the warm-up start; the fit with the
// lower final free energy wins.
ImputationResult best_of_starts(const ObservationSet& obs, const Eigen::MatrixXd& g,
                                const ImputationOptions& options, bool temporal, const Eigen::MatrixXd* truth) {
  auto plain = options;
  plain.side_warmup_iters = 0;
  auto result = Solver(obs, g, plain, temporal).run(truth);
  if (!options.use_side_information || options.side_warmup_iters <= 0) return result;
  auto warm = Solver(obs, g, options, temporal).run(truth);
  log::debug("free energy: plain start " + std::to_string(result.log.back().objective) + ", warm start " +
             std::to_string(warm.log.back().objective));
  return warm.log.back().objective < result.log.back().objective ? warm : result;
}

}  // namespace

ImputationResult impute_vbmc_cs(const ObservationSet& obs, const Eigen::MatrixXd& side_similarity,
                                const ImputationOptions& options, const Eigen::MatrixXd* truth) {
  return best_of_starts(obs, side_similarity, options, false, truth);
}

ImputationResult impute_vbsf_cs(const ObservationSet& obs, const Eigen::MatrixXd& side_similarity,
                                const ImputationOptions& options, const Eigen::MatrixXd* truth) {
  return best_of_starts(obs, side_similarity, options, true, truth);
}

}  // namespace driveby
