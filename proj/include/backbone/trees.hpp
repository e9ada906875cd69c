#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "backbone/core.hpp"
#include "backbone/types.hpp"

namespace backbone::trees {

struct BinarizationCut {
  int source_feature = 0;
  double threshold = 0.0;
};

struct BinaryClassificationDataset {
  int n = 0;
  int p = 0;
  std::vector<std::uint8_t> features;  // n x p, row-major, entries in {0,1}
  std::vector<std::uint8_t> labels;    // length n, entries in {0,1}
  std::vector<BinarizationCut> binarization_map;  // one entry per binary column

  std::uint8_t at(int row, int col) const { return features[static_cast<std::size_t>(row) * p + col]; }
  void validate() const;
};

// Complete binary tree of the given depth: 2^d - 1 internal nodes in heap
// order, 2^d leaves. split_feature -1 is the no-op padding split (all samples
// routed left; the right subtree replicates the leaf).
struct TreeModel {
  int depth = 1;
  std::vector<int> split_feature;
  std::vector<double> leaf_positive_fraction;
  int misclassification_count = 0;

  int num_internal() const { return (1 << depth) - 1; }
  int num_leaves() const { return 1 << depth; }
  int leaf_for(const BinaryClassificationDataset& data, int row) const;
  double score(const BinaryClassificationDataset& data, int row) const;
  int predict(const BinaryClassificationDataset& data, int row) const;
  int count_errors(const BinaryClassificationDataset& data) const;
};

using FeatureImportance = std::vector<double>;  // per feature, >= 0, sums to 1 or 0

// Quantile binarization: each raw column becomes `bins_per_feature` binary
// columns, column q is 1 iff the raw value exceeds the q-th quantile cut.
BinaryClassificationDataset binarize(const Eigen::MatrixXd& raw,
                                     const std::vector<std::uint8_t>& labels,
                                     int bins_per_feature);

// Re-applies previously learned cuts, e.g. to a held-out split.
BinaryClassificationDataset apply_cuts(const Eigen::MatrixXd& raw,
                                       const std::vector<std::uint8_t>& labels,
                                       const std::vector<BinarizationCut>& cuts);

double gini_impurity(int positives, int total);

// Greedy CART restricted to `subset`: maximal weighted Gini decrease per node,
// ties by lower feature index.
TreeModel fit_tree_greedy(const BinaryClassificationDataset& data, const IndexSet& subset,
                          int depth);

FeatureImportance tree_feature_importance(const TreeModel& model,
                                          const BinaryClassificationDataset& data);

// Features used in at least one effective split with normalized importance
// >= importance_floor.
IndexSet extract_split_features(const TreeModel& model, const BinaryClassificationDataset& data,
                                double importance_floor = 0.0);

// Globally minimal misclassification count over complete depth-d trees with
// splits restricted to `backbone`; memoized exhaustive search, ties broken by
// the lexicographically smallest split-feature sequence.
TreeModel fit_tree_exact(const BinaryClassificationDataset& data, const IndexSet& backbone,
                         int depth, int feature_cap = 24, int depth_cap = 3);

// Mann-Whitney AUC with tie correction.
double auc(const std::vector<std::uint8_t>& labels, const std::vector<double>& scores);

struct DecisionTreeOptions {
  BackboneConfig engine;
  int depth = 2;
  double importance_floor = 0.0;
  int feature_cap = 24;
  int depth_cap = 3;
};

struct DecisionTreeResult {
  BackboneResult engine;
  TreeModel model;
};

// Backbone pipeline over binarized features: correlation screening, greedy
// subproblem trees, split-feature-union backbone, exact reduced tree.
DecisionTreeResult backbone_decision_tree(const BinaryClassificationDataset& data,
                                          const DecisionTreeOptions& options);

}  // namespace backbone::trees
