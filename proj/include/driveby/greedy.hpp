#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driveby/objectives.hpp"

namespace driveby {

struct SelectionResult {
  std::string method;                  // greedy, lazy_greedy, brute_force, random
  std::vector<int> chosen;             // in pick order
  std::vector<double> gain_trajectory; // objective value after each pick
  ObjectiveKind kind = ObjectiveKind::rfl;
  double rho = 0.0;
  int k = 0;
  std::size_t evaluations = 0;         // marginal-gain or subset evaluations performed

  double final_gain() const { return gain_trajectory.empty() ? 0.0 : gain_trajectory.back(); }
};

// k rounds of argmax over the marginal gain of every unselected bus; ties go
// to the lowest bus id. With threads > 1 the candidates of a round are
// evaluated concurrently; the result does not depend on the thread count.
SelectionResult greedy_select(const SetFunction& f, int k, int threads = 1);

// Same output as greedy_select, skipping evaluations whose stale upper bound
// cannot beat the current best.
SelectionResult lazy_greedy_select(const SetFunction& f, int k);

// Exhaustive optimum over all k-subsets, first in lexicographic order on ties.
// Refuses (BudgetError) when C(B, k) exceeds `budget`.
SelectionResult brute_force_select(const SetFunction& f, int k, std::uint64_t budget = 1'000'000);

// Uniform random k-subset drawn from the seed; reported in draw order.
SelectionResult random_select(const SetFunction& f, int k, std::uint64_t seed);

std::uint64_t binomial(int n, int k);

using SubsetFunction = std::function<double(std::span<const int>)>;

struct PropertyWitness {
  std::vector<int> smaller;  // C
  std::vector<int> larger;   // D, with C a subset of D
  int outsider = -1;         // b, not in D
  double slack = 0.0;
  std::string property;      // "monotone" or "submodular"
};

struct PropertyReport {
  int trials = 0;
  double worst_monotone_slack = 0.0;
  double worst_submodular_slack = 0.0;
  bool pass = false;
  std::optional<PropertyWitness> witness;  // worst violation, when failing

  std::string summary() const;
};

inline constexpr double kPropertyTolerance = 1e-12;

// Samples random chains C within D and outsiders b not in D. Monotone slack is
// min(f(D) - f(C), f(C + b) - f(C)); submodular slack is
// (f(C + b) - f(C)) - (f(D + b) - f(D)). Passes iff both are >= -1e-12.
PropertyReport check_monotone_submodular(const SubsetFunction& f, int fleet_size, int trials,
                                         std::uint64_t seed);
PropertyReport check_monotone_submodular(const SetFunction& f, int trials, std::uint64_t seed);

// Structured record of a selection: ids and per-round gains.
std::string selection_to_json(const SelectionResult& result);
SelectionResult selection_from_json(const std::string& text);

}  // namespace driveby
