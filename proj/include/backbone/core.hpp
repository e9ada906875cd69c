#pragma once

#include <any>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "backbone/types.hpp"

namespace backbone {

// Hyperparameters of the two-phase engine.
struct BackboneConfig {
  int num_subproblems = 5;          // M
  double screening_fraction = 0.5;  // alpha, fraction of indicators retained
  double subproblem_fraction = 0.5; // beta, fraction of retained indicators per subproblem
  int max_backbone_size = 50;       // B_max
  int max_iterations = 10;
  std::uint64_t master_seed = 0;
  std::optional<double> time_budget_sec;
  int num_workers = 1;  // subproblem fan-out; results are schedule-independent

  void validate() const;
};

// One screening utility per indicator; higher means more likely relevant.
using UtilityVector = std::vector<double>;

struct SubproblemPartition {
  std::vector<IndexSet> subsets;
  int iteration = 0;
};

struct IterationRecord {
  int t = 0;
  int num_subproblems = 0;   // M_t
  std::size_t retained_size = 0;  // |U_t| entering the iteration
  std::size_t backbone_size = 0;  // |B| at the end of the iteration
  double elapsed_sec = 0.0;
  bool fallback = false;  // empty backbone replaced by U_t
};

struct BackboneResult {
  IndexSet backbone;
  std::vector<IterationRecord> trace;
  std::vector<int> selection_counts;  // per indicator, final iteration's vote
  bool truncated = false;
  std::any model;

  // Timing-free serialization; equal strings certify schedule-independent runs.
  std::string canonical_json() const;
};

// The surface a problem implements to plug into run_backbone.
// In the supervised case the sampled indicators and the extracted ones share a
// universe and the engine iterates. When `indicator_universe_size` differs
// from `universe_size` (clustering: points sampled, pairs extracted), the
// engine runs a single fan-out round.
struct SolverContract {
  std::size_t universe_size = 0;
  std::size_t indicator_universe_size = 0;  // defaults to universe_size when 0
  std::function<UtilityVector()> calculate_utilities;  // optional
  std::function<std::any(const IndexSet& subset, std::uint64_t seed)> fit_subproblem;
  std::function<IndexSet(const std::any& model)> extract_relevant;
  std::function<std::any(const IndexSet& backbone)> fit;
};

// Top ceil(alpha * universe_size) indicators by utility, ties broken by lower
// index, returned sorted ascending.
IndexSet screen(const UtilityVector& utilities, double alpha, std::size_t universe_size);

// `count` independent uniform samples without replacement of size
// min(ceil(beta*|retained|), |retained|), followed by a coverage repair that
// appends uncovered indicators to the first subset.
SubproblemPartition construct_subproblems(const IndexSet& retained, const UtilityVector& utilities,
                                          int count, double beta, std::uint64_t seed,
                                          int iteration = 0);

BackboneResult run_backbone(const SolverContract& problem, const BackboneConfig& config);

}  // namespace backbone
