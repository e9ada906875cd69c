#include "backbone/core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <atomic>
#include <numeric>
#include <sstream>
#include <thread>

#include "backbone/errors.hpp"
#include "backbone/rng.hpp"

namespace backbone {

void BackboneConfig::validate() const {
  if (num_subproblems < 1) throw InvalidInputError("num_subproblems must be >= 1");
  if (!(screening_fraction > 0.0 && screening_fraction <= 1.0))
    throw InvalidInputError("screening_fraction must be in (0, 1]");
  if (!(subproblem_fraction > 0.0 && subproblem_fraction <= 1.0))
    throw InvalidInputError("subproblem_fraction must be in (0, 1]");
  if (max_backbone_size < 1) throw InvalidInputError("max_backbone_size must be >= 1");
  if (max_iterations < 1) throw InvalidInputError("max_iterations must be >= 1");
  if (num_workers < 1) throw InvalidInputError("num_workers must be >= 1");
}

IndexSet screen(const UtilityVector& utilities, double alpha, std::size_t universe_size) {
  if (universe_size == 0) throw InvalidInputError("screen: empty indicator universe");
  if (utilities.size() != universe_size)
    throw InvalidInputError("screen: utility vector size mismatch");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInputError("screen: alpha must be in (0, 1]");
  for (double u : utilities)
    if (!std::isfinite(u)) throw InvalidInputError("screen: non-finite utility");

  auto keep = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(universe_size)));
  keep = std::min(keep, universe_size);
  std::vector<IndicatorId> order(universe_size);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](IndicatorId a, IndicatorId b) {
    return utilities[a] > utilities[b];  // ties keep lower index first
  });
  IndexSet out(order.begin(), order.begin() + keep);
  std::sort(out.begin(), out.end());
  return out;
}

SubproblemPartition construct_subproblems(const IndexSet& retained, const UtilityVector& utilities,
                                          int count, double beta, std::uint64_t seed,
                                          int iteration) {
  (void)utilities;
  if (count < 1) throw InvalidInputError("construct_subproblems: count must be >= 1");
  if (retained.empty()) throw InvalidInputError("construct_subproblems: retained set is empty");
  if (!(beta > 0.0 && beta <= 1.0))
    throw InvalidInputError("construct_subproblems: beta must be in (0, 1]");

  const std::size_t total = retained.size();
  std::size_t size =
      std::min(static_cast<std::size_t>(std::ceil(beta * static_cast<double>(total))), total);
  size = std::max<std::size_t>(size, 1);

  SubproblemPartition part;
  part.iteration = iteration;
  part.subsets.resize(count);
  std::vector<char> covered(total, 0);
  for (int m = 0; m < count; ++m) {
    auto rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(iteration),
                                    static_cast<std::uint64_t>(m)));
    // partial Fisher-Yates over positions into `retained`
    std::vector<std::uint32_t> pos(total);
    std::iota(pos.begin(), pos.end(), 0u);
    IndexSet& subset = part.subsets[m];
    subset.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(pos[i], pos[pick(rng)]);
      subset.push_back(retained[pos[i]]);
      covered[pos[i]] = 1;
    }
    std::sort(subset.begin(), subset.end());
  }
  // coverage repair: every retained indicator appears in at least one subset
  for (std::size_t i = 0; i < total; ++i)
    if (!covered[i]) part.subsets[0].push_back(retained[i]);
  sort_unique(part.subsets[0]);
  return part;
}

namespace {

struct SubproblemOutcome {
  IndexSet relevant;
  std::exception_ptr error;
};

// Fan the M_t fits across workers; outcomes land in slot m so the merge is
// independent of scheduling.
std::vector<SubproblemOutcome> fan_out(const SolverContract& problem,
                                       const SubproblemPartition& part, std::uint64_t master_seed,
                                       int t, int num_workers) {
  const int count = static_cast<int>(part.subsets.size());
  std::vector<SubproblemOutcome> out(count);
  auto work = [&](int m) {
    try {
      std::uint64_t seed = derive_seed(master_seed ^ 0x5eedULL, static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(m));
      std::any model = problem.fit_subproblem(part.subsets[m], seed);
      out[m].relevant = problem.extract_relevant(model);
      sort_unique(out[m].relevant);
    } catch (...) {
      out[m].error = std::current_exception();
    }
  };
  if (num_workers <= 1 || count <= 1) {
    for (int m = 0; m < count; ++m) work(m);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    int threads = std::min(num_workers, count);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int m = next.fetch_add(1); m < count; m = next.fetch_add(1)) work(m);
      });
    for (auto& th : pool) th.join();
  }
  return out;
}

std::string context_message(const char* what, int t, int m) {
  std::ostringstream os;
  os << "backbone iteration t=" << t << ", subproblem m=" << m << ": " << what;
  return os.str();
}

}  // namespace

std::string BackboneResult::canonical_json() const {
  std::ostringstream os;
  os << "{\"backbone\":[";
  for (std::size_t i = 0; i < backbone.size(); ++i) os << (i ? "," : "") << backbone[i];
  os << "],\"truncated\":" << (truncated ? "true" : "false") << ",\"trace\":[";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const IterationRecord& r = trace[i];
    os << (i ? "," : "") << "{\"t\":" << r.t << ",\"M_t\":" << r.num_subproblems
       << ",\"retained\":" << r.retained_size << ",\"backbone\":" << r.backbone_size
       << ",\"fallback\":" << (r.fallback ? "true" : "false") << "}";
  }
  os << "],\"counts\":[";
  for (std::size_t i = 0; i < selection_counts.size(); ++i)
    os << (i ? "," : "") << selection_counts[i];
  os << "]}";
  return os.str();
}

BackboneResult run_backbone(const SolverContract& problem, const BackboneConfig& config) {
  config.validate();
  if (problem.universe_size == 0) throw InvalidInputError("run_backbone: empty universe");
  if (!problem.fit_subproblem || !problem.extract_relevant || !problem.fit)
    throw InvalidInputError("run_backbone: contract is missing a mandatory function");

  const std::size_t sample_universe = problem.universe_size;
  const std::size_t indicator_universe =
      problem.indicator_universe_size ? problem.indicator_universe_size : sample_universe;
  const bool unsupervised = indicator_universe != sample_universe;

  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  UtilityVector utilities;
  if (problem.calculate_utilities && !unsupervised) {
    utilities = problem.calculate_utilities();
    if (utilities.size() != sample_universe)
      throw InvalidInputError("run_backbone: calculate_utilities size mismatch");
  } else {
    utilities.assign(sample_universe, 1.0);
  }
  double alpha = unsupervised ? 1.0 : config.screening_fraction;
  IndexSet retained = screen(utilities, alpha, sample_universe);

  BackboneResult result;
  IndexSet bb;
  std::vector<int> counts(indicator_universe, 0);

  for (int t = 0; t < config.max_iterations; ++t) {
    int m_t = static_cast<int>(
        std::ceil(static_cast<double>(config.num_subproblems) / std::pow(2.0, t)));
    m_t = std::max(m_t, 1);
    SubproblemPartition part = construct_subproblems(retained, utilities, m_t,
                                                     config.subproblem_fraction,
                                                     config.master_seed, t);
    auto outcomes = fan_out(problem, part, config.master_seed, t, config.num_workers);
    for (int m = 0; m < m_t; ++m) {
      if (outcomes[m].error) {
        try {
          std::rethrow_exception(outcomes[m].error);
        } catch (const std::exception& e) {
          throw SolverError(context_message(e.what(), t, m));
        }
      }
      if (!unsupervised && !is_subset(outcomes[m].relevant, part.subsets[m]))
        throw SolverError(context_message("extract_relevant returned ids outside the subproblem",
                                          t, m));
    }

    bb.clear();
    std::fill(counts.begin(), counts.end(), 0);
    for (int m = 0; m < m_t; ++m) {
      bb = set_union(bb, outcomes[m].relevant);
      for (IndicatorId id : outcomes[m].relevant) {
        if (id >= indicator_universe)
          throw SolverError(context_message("indicator id outside the declared universe", t, m));
        ++counts[id];
      }
    }

    IterationRecord rec;
    rec.t = t;
    rec.num_subproblems = m_t;
    rec.retained_size = retained.size();
    rec.fallback = bb.empty();
    if (bb.empty()) bb = retained;
    rec.backbone_size = bb.size();
    rec.elapsed_sec = elapsed();
    result.trace.push_back(rec);

    if (rec.fallback) break;
    if (unsupervised) break;  // pair-valued backbone cannot seed another round
    retained = bb;
    if (bb.size() <= static_cast<std::size_t>(config.max_backbone_size)) break;
    if (m_t == 1) break;
    if (t + 1 >= config.max_iterations) break;
    if (config.time_budget_sec && elapsed() > *config.time_budget_sec) break;
  }

  if (bb.size() > static_cast<std::size_t>(config.max_backbone_size)) {
    // keep the B_max indicators selected by the most subproblems;
    // ties by utility (when comparable), then by lower index
    IndexSet sorted = bb;
    std::sort(sorted.begin(), sorted.end(), [&](IndicatorId a, IndicatorId b) {
      if (counts[a] != counts[b]) return counts[a] > counts[b];
      double ua = (a < utilities.size()) ? utilities[a] : 0.0;
      double ub = (b < utilities.size()) ? utilities[b] : 0.0;
      if (ua != ub) return ua > ub;
      return a < b;
    });
    sorted.resize(config.max_backbone_size);
    std::sort(sorted.begin(), sorted.end());
    bb = std::move(sorted);
    result.truncated = true;
  }

  result.backbone = bb;
  result.selection_counts = std::move(counts);
  try {
    result.model = problem.fit(result.backbone);
  } catch (const SolverScaleError& e) {
    throw SolverScaleError(std::string("backbone final fit: ") + e.what());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(std::string("backbone final fit: ") + e.what());
  } catch (const std::exception& e) {
    throw SolverError(std::string("backbone final fit: ") + e.what());
  }
  return result;
}

}  // namespace backbone
