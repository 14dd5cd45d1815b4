#include "driveby/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "driveby/errors.hpp"
#include "driveby/rng.hpp"

namespace driveby {

namespace {

void require_k(const SetFunction& f, int k) {
  if (k <= 0) throw ArgumentError("k must be at least 1");
  if (k > f.fleet_size()) {
    throw ArgumentError("k=" + std::to_string(k) + " exceeds the fleet size B=" +
                        std::to_string(f.fleet_size()));
  }
}

SelectionResult make_result(const SetFunction& f, std::string method, int k) {
  SelectionResult r;
  r.method = std::move(method);
  r.kind = f.kind();
  r.rho = f.rho();
  r.k = k;
  return r;
}

}  // namespace

SelectionResult greedy_select(const SetFunction& f, int k, int threads) {
  require_k(f, k);
  const int B = f.fleet_size();
  auto result = make_result(f, "greedy", k);
  auto state = f.initial_state();
  std::vector<double> gains(static_cast<std::size_t>(B));
  threads = std::max(1, std::min(threads, B));

  for (int round = 0; round < k; ++round) {
    auto evaluate_range = [&](int begin, int end) {
      for (int e = begin; e < end; ++e) {
        gains[e] = state.in_set[e] ? -1.0 : f.incremental_gain(state, e);
      }
    };
    if (threads == 1) {
      evaluate_range(0, B);
    } else {
      std::vector<std::jthread> workers;
      const int chunk = (B + threads - 1) / threads;
      for (int w = 0; w < threads; ++w) {
        const int begin = w * chunk, end = std::min(B, begin + chunk);
        if (begin < end) workers.emplace_back(evaluate_range, begin, end);
      }
    }
    result.evaluations += static_cast<std::size_t>(B - round);

    int best = -1;
    for (int e = 0; e < B; ++e) {
      if (state.in_set[e]) continue;
      if (best < 0 || gains[e] > gains[best]) best = e;
    }
    f.commit(state, best);
    result.chosen.push_back(best);
    result.gain_trajectory.push_back(state.value);
  }
  return result;
}

SelectionResult lazy_greedy_select(const SetFunction& f, int k) {
  require_k(f, k);
  const int B = f.fleet_size();
  auto result = make_result(f, "lazy_greedy", k);
  auto state = f.initial_state();

  struct Entry {
    double bound;
    int bus;
    int round;  // round in which `bound` was computed
  };
  // Highest bound first; equal bounds pop the lowest bus id first, which
  // reproduces the eager tie-break.
  auto cmp = [](const Entry& a, const Entry& b) {
    return a.bound != b.bound ? a.bound < b.bound : a.bus > b.bus;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (int e = 0; e < B; ++e) {
    heap.push({f.incremental_gain(state, e), e, 0});
    ++result.evaluations;
  }

  for (int round = 0; round < k; ++round) {
    auto refresh = [&](Entry& e) {
      if (e.round == round) return;
      e.bound = f.incremental_gain(state, e.bus);
      e.round = round;
      ++result.evaluations;
    };
    while (heap.top().round != round) {
      auto top = heap.top();
      heap.pop();
      refresh(top);
      heap.push(top);
    }
    auto best = heap.top();
    heap.pop();
    // Gains are differences of rounded objective values, so a stale bound can
    // sit an ulp below its fresh gain. Re-check anything that could still tie.
    const double slack = 1e-9 * std::max(1.0, std::abs(best.bound));
    std::vector<Entry> near;
    while (!heap.empty() && heap.top().bound >= best.bound - slack) {
      auto e = heap.top();
      heap.pop();
      refresh(e);
      if (e.bound > best.bound || (e.bound == best.bound && e.bus < best.bus)) std::swap(e, best);
      near.push_back(e);
    }
    for (const auto& e : near) heap.push(e);
    f.commit(state, best.bus);
    result.chosen.push_back(best.bus);
    result.gain_trajectory.push_back(state.value);
  }
  return result;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  // Exact while the running value fits; saturates otherwise.
  unsigned __int128 c = 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (c > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(c);
}

SelectionResult brute_force_select(const SetFunction& f, int k, std::uint64_t budget) {
  require_k(f, k);
  const int B = f.fleet_size();
  const auto subsets = binomial(B, k);
  if (subsets > budget) {
    throw BudgetError("exhaustive search over C(" + std::to_string(B) + "," + std::to_string(k) +
                      ")=" + std::to_string(subsets) + " subsets exceeds the budget of " +
                      std::to_string(budget));
  }
  auto result = make_result(f, "brute_force", k);
  std::vector<int> current(static_cast<std::size_t>(k));
  std::iota(current.begin(), current.end(), 0);
  std::vector<int> best_set;
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    const double v = f(current);
    ++result.evaluations;
    if (v > best) {
      best = v;
      best_set = current;
    }
    int i = k - 1;
    while (i >= 0 && current[i] == B - k + i) --i;
    if (i < 0) break;
    ++current[i];
    for (int j = i + 1; j < k; ++j) current[j] = current[j - 1] + 1;
  }
  result.chosen = best_set;
  std::vector<int> prefix;
  for (const int b : best_set) {
    prefix.push_back(b);
    result.gain_trajectory.push_back(f(prefix));
  }
  return result;
}

SelectionResult random_select(const SetFunction& f, int k, std::uint64_t seed) {
  require_k(f, k);
  auto result = make_result(f, "random", k);
  std::vector<int> buses(static_cast<std::size_t>(f.fleet_size()));
  std::iota(buses.begin(), buses.end(), 0);
  Rng rng(seed, streams::kRandomBaseline);
  rng.shuffle(buses);
  auto state = f.initial_state();
  for (int i = 0; i < k; ++i) {
    f.commit(state, buses[i]);
    result.chosen.push_back(buses[i]);
    result.gain_trajectory.push_back(state.value);
  }
  return result;
}

std::string PropertyReport::summary() const {
  std::ostringstream out;
  out << (pass ? "PASS" : "FAIL") << " trials=" << trials
      << " worst_monotone_slack=" << worst_monotone_slack
      << " worst_submodular_slack=" << worst_submodular_slack;
  if (witness) {
    auto list = [](const std::vector<int>& v) {
      std::string s = "{";
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s + "}";
    };
    out << " witness(" << witness->property << "): C=" << list(witness->smaller)
        << " D=" << list(witness->larger) << " b=" << witness->outsider
        << " slack=" << witness->slack;
  }
  return out.str();
}

PropertyReport check_monotone_submodular(const SubsetFunction& f, int fleet_size, int trials,
                                         std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  if (fleet_size < 1) throw ArgumentError("fleet must be non-empty");
  PropertyReport report;
  report.trials = trials;
  report.worst_monotone_slack = std::numeric_limits<double>::infinity();
  report.worst_submodular_slack = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  double worst_violation = 0.0;

  for (int trial = 0; trial < trials; ++trial) {
    // D: random subset leaving at least one outsider; C: random subset of D.
    std::vector<int> larger, smaller, outside;
    const double p = rng.uniform();
    for (int b = 0; b < fleet_size; ++b) {
      if (rng.uniform() < p) {
        larger.push_back(b);
      } else {
        outside.push_back(b);
      }
    }
    if (outside.empty()) {
      const auto drop = static_cast<std::size_t>(rng.below(larger.size()));
      outside.push_back(larger[drop]);
      larger.erase(larger.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    const double q = rng.uniform();
    for (const int b : larger) {
      if (rng.uniform() < q) smaller.push_back(b);
    }
    const int outsider = outside[rng.below(outside.size())];

    auto smaller_plus = smaller;
    smaller_plus.push_back(outsider);
    auto larger_plus = larger;
    larger_plus.push_back(outsider);

    const double fc = f(smaller), fd = f(larger), fcb = f(smaller_plus), fdb = f(larger_plus);
    const double monotone = std::min(fd - fc, fcb - fc);
    const double submodular = (fcb - fc) - (fdb - fd);
    report.worst_monotone_slack = std::min(report.worst_monotone_slack, monotone);
    report.worst_submodular_slack = std::min(report.worst_submodular_slack, submodular);

    const auto note = [&](double slack, const char* property) {
      if (slack < -kPropertyTolerance && slack < worst_violation) {
        worst_violation = slack;
        report.witness = PropertyWitness{smaller, larger, outsider, slack, property};
      }
    };
    note(monotone, "monotone");
    note(submodular, "submodular");
  }
  report.pass = report.worst_monotone_slack >= -kPropertyTolerance &&
                report.worst_submodular_slack >= -kPropertyTolerance;
  return report;
}

PropertyReport check_monotone_submodular(const SetFunction& f, int trials, std::uint64_t seed) {
  return check_monotone_submodular([&f](std::span<const int> s) { return f(s); }, f.fleet_size(),
                                   trials, seed);
}

std::string selection_to_json(const SelectionResult& result) {
  nlohmann::ordered_json j;
  j["method"] = result.method;
  j["objective"] = std::string(to_string(result.kind));
  j["rho"] = result.rho;
  j["k"] = result.k;
  j["chosen"] = result.chosen;
  j["gain_trajectory"] = result.gain_trajectory;
  j["evaluations"] = result.evaluations;
  return j.dump(2);
}

SelectionResult selection_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    SelectionResult r;
    r.method = j.at("method").get<std::string>();
    r.kind = objective_from_string(j.at("objective").get<std::string>());
    r.rho = j.at("rho").get<double>();
    r.k = j.at("k").get<int>();
    r.chosen = j.at("chosen").get<std::vector<int>>();
    r.gain_trajectory = j.at("gain_trajectory").get<std::vector<double>>();
    r.evaluations = j.value("evaluations", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed selection record: ") + e.what());
  }
}

}  // namespace driveby
