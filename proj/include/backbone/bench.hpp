#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "backbone/core.hpp"

namespace backbone::bench {

enum class Problem { SparseRegression, DecisionTree, Clustering };
enum class MethodKind { HeuristicBaseline, ExactBaseline, Backbone };

const char* to_string(Problem p);
const char* to_string(MethodKind k);

struct MethodSpec {
  std::string name;
  MethodKind kind = MethodKind::HeuristicBaseline;
  BackboneConfig config;  // consulted for backbone methods only
  double time_budget_sec = 60.0;
};

struct ExperimentSpec {
  Problem problem = Problem::SparseRegression;
  int n = 100;
  int p = 20;   // features (supervised) or point dimension (clustering)
  int k = 3;    // true sparsity / informative features / true blob count
  double noise = 5.0;  // snr (regression), flip rate (trees), blob spread (clustering)
  double lambda2 = 0.001;
  int depth = 2;
  int bins_per_feature = 2;
  int target_k = 2;
  int min_cluster_size = 1;
  double gap_tolerance = 0.01;
  std::vector<MethodSpec> methods;
  int repetitions = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BenchRecord {
  int repetition = 0;
  std::string method;
  MethodKind kind = MethodKind::HeuristicBaseline;
  double accuracy = 0.0;  // R^2 / AUC / silhouette
  bool accuracy_valid = false;
  double time_sec = 0.0;
  double backbone_size = 0.0;
  bool has_backbone = false;
  bool timed_out = false;
  std::string note;  // failure reason when accuracy is invalid
};

struct AggregateRow {
  std::string method;
  MethodKind kind = MethodKind::HeuristicBaseline;
  BackboneConfig config;
  double accuracy = 0.0;
  bool accuracy_valid = false;
  double time_sec = 0.0;
  double backbone_size = 0.0;
  bool has_backbone = false;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<BenchRecord> raw;
  std::vector<AggregateRow> rows;  // means over repetitions, in method order
};

// Generates fresh data per repetition (held-out test split for the supervised
// problems), times every configured method, and aggregates means. A failing
// or over-budget method is recorded, never fatal.
ExperimentReport run_benchmark(const ExperimentSpec& spec);

// Header: problem,method,M,alpha,beta,accuracy,time_sec,backbone_size.
// Engine columns and backbone size are empty for non-backbone methods.
void write_report_csv(const ExperimentReport& report, std::ostream& out);
void write_report_json(const ExperimentReport& report, std::ostream& out);

}  // namespace backbone::bench
