#include "driveby/objectives.hpp"

#include <algorithm>

#include "driveby/errors.hpp"

namespace driveby {

namespace {

double percent(std::size_t count, double denominator) {
  return 100.0 * static_cast<double>(count) / denominator;
}

double cells(const OccupancyTensor& tensor) {
  return static_cast<double>(tensor.L()) * static_cast<double>(tensor.T());
}

void require_similarity(const OccupancyTensor& tensor, const SimilarityMatrix& s) {
  if (s.rows() != tensor.L() || s.cols() != tensor.L()) {
    throw ArgumentError("similarity matrix is " + std::to_string(s.rows()) + "x" +
                        std::to_string(s.cols()) + " but the tensor has L=" +
                        std::to_string(tensor.L()));
  }
}

void require_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ArgumentError("rho must lie in [0, 1]");
}

std::vector<std::vector<int>> sampled_by_slot(const SamplingMatrix& theta) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(theta.T()));
  for (int t = 0; t < theta.T(); ++t) out[t] = theta.sampled_at(t);
  return out;
}

// Best similarity from each location to the locations sampled at each slot,
// laid out [l * T + t]; 0 where nothing is sampled (S is nonnegative, so 0 is
// the identity of the max).
std::vector<double> spatial_terms(const OccupancyTensor& tensor, std::span<const int> subset,
                                  const SimilarityMatrix& s) {
  const int L = tensor.L(), T = tensor.T();
  const auto sampled = sampled_by_slot(sampling_matrix(tensor, subset));
  std::vector<double> spatial(static_cast<std::size_t>(L) * T, 0.0);
  for (int l = 0; l < L; ++l) {
    for (int t = 0; t < T; ++t) {
      double best = 0.0;
      for (const int m : sampled[t]) best = std::max(best, s(l, m));
      spatial[static_cast<std::size_t>(l) * T + t] = best;
    }
  }
  return spatial;
}

}  // namespace

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::pc: return "pc";
    case ObjectiveKind::psc: return "psc";
    case ObjectiveKind::fls: return "fls";
    case ObjectiveKind::flst: return "flst";
    case ObjectiveKind::rfl: return "rfl";
  }
  return "?";
}

ObjectiveKind objective_from_string(std::string_view name) {
  if (name == "pc") return ObjectiveKind::pc;
  if (name == "psc") return ObjectiveKind::psc;
  if (name == "fls") return ObjectiveKind::fls;
  if (name == "flst") return ObjectiveKind::flst;
  if (name == "rfl") return ObjectiveKind::rfl;
  throw ArgumentError("unknown objective '" + std::string(name) + "'");
}

GainValue pc_gain(const OccupancyTensor& tensor, std::span<const int> subset) {
  const auto theta = sampling_matrix(tensor, subset);
  return {percent(theta.count(), cells(tensor)), ObjectiveKind::pc};
}

GainValue psc_gain(const OccupancyTensor& tensor, std::span<const int> subset) {
  const auto theta = sampling_matrix(tensor, subset);
  std::size_t covered = 0;
  for (int l = 0; l < tensor.L(); ++l) covered += theta.row_count(l) > 0 ? 1 : 0;
  return {percent(covered, tensor.L()), ObjectiveKind::psc};
}

GainValue fls_gain(const OccupancyTensor& tensor, std::span<const int> subset,
                   const SimilarityMatrix& similarity) {
  require_similarity(tensor, similarity);
  const auto spatial = spatial_terms(tensor, subset, similarity);
  double total = 0.0;
  for (const double s : spatial) total += s;
  return {total / cells(tensor), ObjectiveKind::fls};
}

GainValue flst_gain_reference(const OccupancyTensor& tensor, std::span<const int> subset,
                              const SimilarityMatrix& similarity, double rho) {
  require_similarity(tensor, similarity);
  require_rho(rho);
  const int L = tensor.L(), T = tensor.T();
  const auto sampled = sampled_by_slot(sampling_matrix(tensor, subset));
  double total = 0.0;
  for (int l = 0; l < L; ++l) {
    for (int t = 0; t < T; ++t) {
      double best = 0.0;
      for (int j = 0; j <= t; ++j) {
        const double decay = causal_kernel(rho, t, j);
        for (const int m : sampled[j]) best = std::max(best, similarity(l, m) * decay);
      }
      total += best;
    }
  }
  return {total / cells(tensor), ObjectiveKind::flst};
}

Eigen::MatrixXd rfl_facility_values(const OccupancyTensor& tensor, std::span<const int> subset,
                                    const SimilarityMatrix& similarity, double rho) {
  require_similarity(tensor, similarity);
  require_rho(rho);
  const int L = tensor.L(), T = tensor.T();
  const auto spatial = spatial_terms(tensor, subset, similarity);
  Eigen::MatrixXd pi(L, T);
  for (int l = 0; l < L; ++l) {
    double prev = 0.0;
    for (int t = 0; t < T; ++t) {
      prev = std::max(spatial[static_cast<std::size_t>(l) * T + t], rho * prev);
      pi(l, t) = prev;
    }
  }
  return pi;
}

GainValue rfl_gain(const OccupancyTensor& tensor, std::span<const int> subset,
                   const SimilarityMatrix& similarity, double rho) {
  require_similarity(tensor, similarity);
  require_rho(rho);
  const int L = tensor.L(), T = tensor.T();
  const auto spatial = spatial_terms(tensor, subset, similarity);
  double total = 0.0;
  for (int l = 0; l < L; ++l) {
    double prev = 0.0;
    for (int t = 0; t < T; ++t) {
      prev = std::max(spatial[static_cast<std::size_t>(l) * T + t], rho * prev);
      total += prev;
    }
  }
  return {total / cells(tensor), ObjectiveKind::rfl};
}

SetFunction::SetFunction(const OccupancyTensor& tensor, ObjectiveKind kind,
                         const SimilarityMatrix* similarity, double rho)
    : tensor_(&tensor), kind_(kind), similarity_(similarity), rho_(rho) {
  if (kind == ObjectiveKind::fls || kind == ObjectiveKind::flst || kind == ObjectiveKind::rfl) {
    if (!similarity) throw ArgumentError(std::string(to_string(kind)) + " needs a similarity matrix");
    require_similarity(tensor, *similarity);
  }
  if (kind == ObjectiveKind::fls) rho_ = 0.0;
  require_rho(rho_);
}

double SetFunction::operator()(std::span<const int> subset) const {
  switch (kind_) {
    case ObjectiveKind::pc: return pc_gain(*tensor_, subset).value;
    case ObjectiveKind::psc: return psc_gain(*tensor_, subset).value;
    case ObjectiveKind::fls: return fls_gain(*tensor_, subset, *similarity_).value;
    case ObjectiveKind::flst: return flst_gain_reference(*tensor_, subset, *similarity_, rho_).value;
    case ObjectiveKind::rfl: return rfl_gain(*tensor_, subset, *similarity_, rho_).value;
  }
  return 0.0;
}

GainState SetFunction::initial_state() const {
  const int L = tensor_->L(), T = tensor_->T();
  const auto n = static_cast<std::size_t>(L) * T;
  GainState state;
  state.kind = kind_;
  state.rho = rho_;
  state.in_set.assign(static_cast<std::size_t>(tensor_->B()), 0);
  switch (kind_) {
    case ObjectiveKind::pc: state.covered.assign(n, 0); break;
    case ObjectiveKind::psc: state.location_hits.assign(static_cast<std::size_t>(L), 0); break;
    case ObjectiveKind::fls:
    case ObjectiveKind::rfl:
      state.spatial.assign(n, 0.0);
      state.pi.assign(n, 0.0);
      break;
    case ObjectiveKind::flst: break;
  }
  return state;
}

// Numerator of the objective after adding `bus` to the state's subset, in the
// same units and summation order as the from-scratch evaluation.
double SetFunction::total_with(const GainState& state, int bus) const {
  const int L = tensor_->L(), T = tensor_->T();
  const auto bus_cells = tensor_->bus_cells(bus);
  switch (kind_) {
    case ObjectiveKind::pc: {
      std::size_t count = state.covered_count;
      for (const auto& c : bus_cells) {
        count += state.covered[static_cast<std::size_t>(c.l) * T + c.t] ? 0 : 1;
      }
      return static_cast<double>(count);
    }
    case ObjectiveKind::psc: {
      std::vector<std::uint8_t> fresh(static_cast<std::size_t>(L), 0);
      std::size_t count = state.covered_count;
      for (const auto& c : bus_cells) {
        if (state.location_hits[c.l] == 0 && !fresh[c.l]) {
          fresh[c.l] = 1;
          ++count;
        }
      }
      return static_cast<double>(count);
    }
    case ObjectiveKind::fls:
    case ObjectiveKind::rfl: {
      // Candidate's best similarity per location, only for the slots it samples.
      std::vector<int> slots;
      std::vector<double> candidate;
      const auto& s = *similarity_;
      for (std::size_t i = 0; i < bus_cells.size();) {
        const int t = bus_cells[i].t;
        slots.push_back(t);
        const auto base = candidate.size();
        candidate.resize(base + static_cast<std::size_t>(L), 0.0);
        std::size_t j = i;
        for (; j < bus_cells.size() && bus_cells[j].t == t; ++j) {
          const int m = bus_cells[j].l;
          for (int l = 0; l < L; ++l) candidate[base + l] = std::max(candidate[base + l], s(l, m));
        }
        i = j;
      }
      double total = 0.0;
      for (int l = 0; l < L; ++l) {
        double prev = 0.0;
        std::size_t p = 0;
        const double* row = state.spatial.data() + static_cast<std::size_t>(l) * T;
        for (int t = 0; t < T; ++t) {
          double term = row[t];
          if (p < slots.size() && slots[p] == t) {
            term = std::max(term, candidate[p * static_cast<std::size_t>(L) + l]);
            ++p;
          }
          prev = std::max(term, rho_ * prev);
          total += prev;
        }
      }
      return total;
    }
    case ObjectiveKind::flst: {
      auto members = state.members;
      members.push_back(bus);
      return flst_gain_reference(*tensor_, members, *similarity_, rho_).value;
    }
  }
  return 0.0;
}

double SetFunction::incremental_gain(const GainState& state, int bus) const {
  if (bus < 0 || bus >= tensor_->B()) throw ArgumentError("bus index out of range");
  if (state.in_set[bus]) return 0.0;
  const double total = total_with(state, bus);
  switch (kind_) {
    case ObjectiveKind::pc:
      return percent(static_cast<std::size_t>(total), cells(*tensor_)) - state.value;
    case ObjectiveKind::psc:
      return percent(static_cast<std::size_t>(total), tensor_->L()) - state.value;
    case ObjectiveKind::fls:
    case ObjectiveKind::rfl: return total / cells(*tensor_) - state.value;
    case ObjectiveKind::flst: return total - state.value;
  }
  return 0.0;
}

void SetFunction::commit(GainState& state, int bus) const {
  if (bus < 0 || bus >= tensor_->B()) throw ArgumentError("bus index out of range");
  if (state.in_set[bus]) return;
  const int L = tensor_->L(), T = tensor_->T();
  state.in_set[bus] = 1;
  state.members.push_back(bus);
  const auto bus_cells = tensor_->bus_cells(bus);
  switch (kind_) {
    case ObjectiveKind::pc:
      for (const auto& c : bus_cells) {
        auto& bit = state.covered[static_cast<std::size_t>(c.l) * T + c.t];
        if (!bit) {
          bit = 1;
          ++state.covered_count;
        }
      }
      state.value = percent(state.covered_count, cells(*tensor_));
      break;
    case ObjectiveKind::psc:
      for (const auto& c : bus_cells) {
        if (state.location_hits[c.l]++ == 0) ++state.covered_count;
      }
      state.value = percent(state.covered_count, L);
      break;
    case ObjectiveKind::fls:
    case ObjectiveKind::rfl: {
      const auto& s = *similarity_;
      for (const auto& c : bus_cells) {
        for (int l = 0; l < L; ++l) {
          auto& term = state.spatial[static_cast<std::size_t>(l) * T + c.t];
          term = std::max(term, s(l, c.l));
        }
      }
      double total = 0.0;
      for (int l = 0; l < L; ++l) {
        double prev = 0.0;
        for (int t = 0; t < T; ++t) {
          const auto idx = static_cast<std::size_t>(l) * T + t;
          prev = std::max(state.spatial[idx], rho_ * prev);
          state.pi[idx] = prev;
          total += prev;
        }
      }
      state.gain_sum = total;
      state.value = total / cells(*tensor_);
      break;
    }
    case ObjectiveKind::flst:
      state.value = flst_gain_reference(*tensor_, state.members, *similarity_, rho_).value;
      break;
  }
}

}  // namespace driveby
