#include "backbone/trees.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "backbone/errors.hpp"

namespace backbone::trees {

namespace {

int leaf_index(int node_id, int depth) { return node_id - ((1 << depth) - 1); }

// Sample subsets as bitmasks over the rows.
using Mask = std::vector<std::uint64_t>;

Mask full_mask(int n) {
  Mask m((n + 63) / 64, ~0ULL);
  if (n % 64) m.back() = (1ULL << (n % 64)) - 1;
  return m;
}

}  // namespace

void BinaryClassificationDataset::validate() const {
  if (n < 1 || p < 1) throw InvalidInputError("trees: empty dataset");
  if (features.size() != static_cast<std::size_t>(n) * p || labels.size() != static_cast<std::size_t>(n))
    throw InvalidInputError("trees: inconsistent dataset sizes");
  for (auto v : features)
    if (v > 1) throw InvalidInputError("trees: feature entries must be 0/1");
  for (auto v : labels)
    if (v > 1) throw InvalidInputError("trees: labels must be 0/1");
}

int TreeModel::leaf_for(const BinaryClassificationDataset& data, int row) const {
  int id = 0;
  for (int d = 0; d < depth; ++d) {
    int f = split_feature[id];
    bool right = (f >= 0) && data.at(row, f) == 1;
    id = 2 * id + (right ? 2 : 1);
  }
  return leaf_index(id, depth);
}

double TreeModel::score(const BinaryClassificationDataset& data, int row) const {
  return leaf_positive_fraction[leaf_for(data, row)];
}

int TreeModel::predict(const BinaryClassificationDataset& data, int row) const {
  return score(data, row) >= 0.5 ? 1 : 0;
}

int TreeModel::count_errors(const BinaryClassificationDataset& data) const {
  int errors = 0;
  for (int i = 0; i < data.n; ++i) errors += predict(data, i) != data.labels[i];
  return errors;
}

BinaryClassificationDataset binarize(const Eigen::MatrixXd& raw,
                                     const std::vector<std::uint8_t>& labels,
                                     int bins_per_feature) {
  if (raw.rows() < 1 || raw.cols() < 1) throw InvalidInputError("binarize: empty matrix");
  if (bins_per_feature < 1) throw InvalidInputError("binarize: bins_per_feature must be >= 1");
  if (labels.size() != static_cast<std::size_t>(raw.rows()))
    throw InvalidInputError("binarize: label count mismatch");

  const int n = static_cast<int>(raw.rows());
  const int praw = static_cast<int>(raw.cols());
  BinaryClassificationDataset out;
  out.n = n;
  out.p = praw * bins_per_feature;
  out.features.assign(static_cast<std::size_t>(n) * out.p, 0);
  out.labels = labels;

  for (int j = 0; j < praw; ++j) {
    std::vector<double> sorted(n);
    for (int i = 0; i < n; ++i) sorted[i] = raw(i, j);
    std::sort(sorted.begin(), sorted.end());
    for (int q = 1; q <= bins_per_feature; ++q) {
      double prob = static_cast<double>(q) / (bins_per_feature + 1);
      double pos = prob * (n - 1);
      int lo = static_cast<int>(std::floor(pos));
      int hi = std::min(lo + 1, n - 1);
      double cut = sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
      int col = j * bins_per_feature + (q - 1);
      out.binarization_map.push_back({j, cut});
      for (int i = 0; i < n; ++i)
        out.features[static_cast<std::size_t>(i) * out.p + col] = raw(i, j) > cut ? 1 : 0;
    }
  }
  return out;
}

BinaryClassificationDataset apply_cuts(const Eigen::MatrixXd& raw,
                                       const std::vector<std::uint8_t>& labels,
                                       const std::vector<BinarizationCut>& cuts) {
  if (cuts.empty()) throw InvalidInputError("apply_cuts: empty cut list");
  if (labels.size() != static_cast<std::size_t>(raw.rows()))
    throw InvalidInputError("apply_cuts: label count mismatch");
  BinaryClassificationDataset out;
  out.n = static_cast<int>(raw.rows());
  out.p = static_cast<int>(cuts.size());
  out.features.assign(static_cast<std::size_t>(out.n) * out.p, 0);
  out.labels = labels;
  out.binarization_map = cuts;
  for (int col = 0; col < out.p; ++col) {
    if (cuts[col].source_feature < 0 || cuts[col].source_feature >= raw.cols())
      throw InvalidInputError("apply_cuts: source feature out of range");
    for (int i = 0; i < out.n; ++i)
      out.features[static_cast<std::size_t>(i) * out.p + col] =
          raw(i, cuts[col].source_feature) > cuts[col].threshold ? 1 : 0;
  }
  return out;
}

double gini_impurity(int positives, int total) {
  if (total <= 0) return 0.0;
  double q = static_cast<double>(positives) / total;
  return 2.0 * q * (1.0 - q);
}

namespace {

struct GreedyBuilder {
  const BinaryClassificationDataset& data;
  const IndexSet& subset;
  TreeModel& model;

  void build(int id, int rem, const std::vector<int>& rows, double parent_frac) {
    int total = static_cast<int>(rows.size());
    int pos = 0;
    for (int r : rows) pos += data.labels[r];
    double frac = total > 0 ? static_cast<double>(pos) / total : parent_frac;
    if (rem == 0) {
      model.leaf_positive_fraction[leaf_index(id, model.depth)] = frac;
      return;
    }

    int best_feature = -1;
    double best_decrease = 1e-15;
    if (total > 0 && pos != 0 && pos != total) {
      double g_parent = gini_impurity(pos, total);
      for (IndicatorId f : subset) {
        int nr = 0, pr = 0;
        for (int r : rows) {
          if (data.at(r, static_cast<int>(f)) == 1) {
            ++nr;
            pr += data.labels[r];
          }
        }
        int nl = total - nr, pl = pos - pr;
        double decrease = g_parent - (static_cast<double>(nl) / total) * gini_impurity(pl, nl) -
                          (static_cast<double>(nr) / total) * gini_impurity(pr, nr);
        if (decrease > best_decrease + 1e-15) {
          best_decrease = decrease;
          best_feature = static_cast<int>(f);
        }
      }
    }

    if (best_feature < 0) {
      // leaf in spirit: pad the remaining layout with no-op splits
      model.split_feature[id] = -1;
      build(2 * id + 1, rem - 1, rows, frac);
      build(2 * id + 2, rem - 1, {}, frac);
      return;
    }
    model.split_feature[id] = best_feature;
    std::vector<int> left, right;
    for (int r : rows)
      (data.at(r, best_feature) == 1 ? right : left).push_back(r);
    build(2 * id + 1, rem - 1, left, frac);
    build(2 * id + 2, rem - 1, right, frac);
  }
};

}  // namespace

TreeModel fit_tree_greedy(const BinaryClassificationDataset& data, const IndexSet& subset,
                          int depth) {
  data.validate();
  if (depth < 1) throw InvalidInputError("fit_tree_greedy: depth must be >= 1");
  if (subset.empty()) throw InvalidInputError("fit_tree_greedy: empty feature subset");

  TreeModel model;
  model.depth = depth;
  model.split_feature.assign(model.num_internal(), -1);
  model.leaf_positive_fraction.assign(model.num_leaves(), 0.0);
  std::vector<int> rows(data.n);
  std::iota(rows.begin(), rows.end(), 0);
  GreedyBuilder{data, subset, model}.build(0, depth, rows, 0.0);
  model.misclassification_count = model.count_errors(data);
  return model;
}

namespace {

// Routes the data through the tree once, attributing weighted Gini decrease
// to each effective split.
void importance_walk(const TreeModel& model, const BinaryClassificationDataset& data, int id,
                     int rem, const std::vector<int>& rows, FeatureImportance& importance) {
  if (rem == 0 || rows.empty()) return;
  int f = model.split_feature[id];
  if (f < 0) {
    importance_walk(model, data, 2 * id + 1, rem - 1, rows, importance);
    return;
  }
  std::vector<int> left, right;
  int pos = 0;
  for (int r : rows) {
    pos += data.labels[r];
    (data.at(r, f) == 1 ? right : left).push_back(r);
  }
  int total = static_cast<int>(rows.size());
  int pr = 0;
  for (int r : right) pr += data.labels[r];
  double decrease = gini_impurity(pos, total) -
                    (static_cast<double>(left.size()) / total) *
                        gini_impurity(pos - pr, static_cast<int>(left.size())) -
                    (static_cast<double>(right.size()) / total) *
                        gini_impurity(pr, static_cast<int>(right.size()));
  if (decrease > 1e-15 && !left.empty() && !right.empty())
    importance[f] += (static_cast<double>(total) / data.n) * decrease;
  importance_walk(model, data, 2 * id + 1, rem - 1, left, importance);
  importance_walk(model, data, 2 * id + 2, rem - 1, right, importance);
}

}  // namespace

FeatureImportance tree_feature_importance(const TreeModel& model,
                                          const BinaryClassificationDataset& data) {
  FeatureImportance importance(data.p, 0.0);
  std::vector<int> rows(data.n);
  std::iota(rows.begin(), rows.end(), 0);
  importance_walk(model, data, 0, model.depth, rows, importance);
  double sum = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (sum > 0)
    for (double& v : importance) v /= sum;
  return importance;
}

IndexSet extract_split_features(const TreeModel& model, const BinaryClassificationDataset& data,
                                double importance_floor) {
  if (importance_floor < 0) throw InvalidInputError("extract_split_features: negative floor");
  FeatureImportance importance = tree_feature_importance(model, data);
  IndexSet out;
  for (int f = 0; f < data.p; ++f)
    if (importance[f] > 0 && importance[f] >= importance_floor)
      out.push_back(static_cast<IndicatorId>(f));
  return out;
}

namespace {

struct ExactSolver {
  const BinaryClassificationDataset& data;
  const IndexSet& backbone;

  struct Entry {
    int error;
    int feature;  // chosen split, or -1 at depth 0
  };
  std::map<std::pair<int, Mask>, Entry> memo;

  std::pair<int, int> count(const Mask& mask) const {
    int pos = 0, total = 0;
    for (std::size_t w = 0; w < mask.size(); ++w) {
      std::uint64_t bits = mask[w];
      total += __builtin_popcountll(bits);
      while (bits) {
        int b = __builtin_ctzll(bits);
        bits &= bits - 1;
        pos += data.labels[w * 64 + b];
      }
    }
    return {pos, total};
  }

  void split_mask(const Mask& mask, int feature, Mask& left, Mask& right) const {
    left.assign(mask.size(), 0);
    right.assign(mask.size(), 0);
    for (std::size_t w = 0; w < mask.size(); ++w) {
      std::uint64_t bits = mask[w];
      while (bits) {
        int b = __builtin_ctzll(bits);
        bits &= bits - 1;
        int row = static_cast<int>(w * 64 + b);
        if (data.at(row, feature) == 1)
          right[w] |= 1ULL << b;
        else
          left[w] |= 1ULL << b;
      }
    }
  }

  Entry best(int rem, const Mask& mask) {
    auto [pos, total] = count(mask);
    if (rem == 0) return {std::min(pos, total - pos), -1};
    auto key = std::make_pair(rem, mask);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;

    Entry result{data.n + 1, -1};
    Mask left, right;
    for (IndicatorId f : backbone) {  // ascending: first minimum is lexicographically smallest
      split_mask(mask, static_cast<int>(f), left, right);
      int err = best(rem - 1, left).error;
      if (err < result.error) err += best(rem - 1, right).error;
      else err = data.n + 1;  // left alone already matches the incumbent; skip
      if (err < result.error) {
        result = {err, static_cast<int>(f)};
        if (err == 0) break;  // cannot improve on a perfect subtree
      }
    }
    memo.emplace(key, result);
    return result;
  }

  void reconstruct(int id, int rem, const Mask& mask, double parent_frac, TreeModel& model) {
    auto [pos, total] = count(mask);
    double frac = total > 0 ? static_cast<double>(pos) / total : parent_frac;
    if (rem == 0) {
      model.leaf_positive_fraction[leaf_index(id, model.depth)] = frac;
      return;
    }
    Entry e = best(rem, mask);
    model.split_feature[id] = e.feature;
    Mask left, right;
    split_mask(mask, e.feature, left, right);
    reconstruct(2 * id + 1, rem - 1, left, frac, model);
    reconstruct(2 * id + 2, rem - 1, right, frac, model);
  }
};

}  // namespace

TreeModel fit_tree_exact(const BinaryClassificationDataset& data, const IndexSet& backbone,
                         int depth, int feature_cap, int depth_cap) {
  data.validate();
  if (depth < 1) throw InvalidInputError("fit_tree_exact: depth must be >= 1");
  if (backbone.empty()) throw InvalidInputError("fit_tree_exact: empty backbone");
  if (depth > depth_cap)
    throw SolverScaleError("fit_tree_exact: depth " + std::to_string(depth) +
                           " exceeds the cap " + std::to_string(depth_cap));
  if (static_cast<int>(backbone.size()) > feature_cap)
    throw SolverScaleError("fit_tree_exact: backbone size " + std::to_string(backbone.size()) +
                           " exceeds the cap " + std::to_string(feature_cap) +
                           "; use a smaller backbone");

  ExactSolver solver{data, backbone, {}};
  Mask all = full_mask(data.n);
  ExactSolver::Entry root = solver.best(depth, all);

  TreeModel model;
  model.depth = depth;
  model.split_feature.assign(model.num_internal(), -1);
  model.leaf_positive_fraction.assign(model.num_leaves(), 0.0);
  solver.reconstruct(0, depth, all, 0.0, model);
  model.misclassification_count = model.count_errors(data);
  // the optimal error is certified by the search itself
  if (model.misclassification_count != root.error)
    throw SolverError("fit_tree_exact: reconstruction mismatch");
  return model;
}

double auc(const std::vector<std::uint8_t>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size() || labels.empty())
    throw InvalidInputError("auc: size mismatch");
  std::int64_t n_pos = std::count(labels.begin(), labels.end(), std::uint8_t{1});
  std::int64_t n_neg = static_cast<std::int64_t>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("auc: both classes must be present");

  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

  // average ranks over tie groups
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  return (rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
         (static_cast<double>(n_pos) * n_neg);
}

DecisionTreeResult backbone_decision_tree(const BinaryClassificationDataset& data,
                                          const DecisionTreeOptions& options) {
  data.validate();
  SolverContract contract;
  contract.universe_size = static_cast<std::size_t>(data.p);
  contract.calculate_utilities = [&] {
    // point-biserial correlation of each binary column with the labels
    UtilityVector u(data.p, 0.0);
    double label_mean = 0;
    for (auto v : data.labels) label_mean += v;
    label_mean /= data.n;
    double label_var = 0;
    for (auto v : data.labels) label_var += (v - label_mean) * (v - label_mean);
    if (label_var < 1e-12) return u;
    for (int f = 0; f < data.p; ++f) {
      double fm = 0;
      for (int r = 0; r < data.n; ++r) fm += data.at(r, f);
      fm /= data.n;
      double cov = 0, var = 0;
      for (int r = 0; r < data.n; ++r) {
        double d = data.at(r, f) - fm;
        cov += d * (data.labels[r] - label_mean);
        var += d * d;
      }
      if (var > 1e-12) u[f] = std::abs(cov) / std::sqrt(var * label_var);
    }
    return u;
  };
  contract.fit_subproblem = [&](const IndexSet& subset, std::uint64_t) -> std::any {
    return fit_tree_greedy(data, subset, options.depth);
  };
  contract.extract_relevant = [&](const std::any& model) {
    return extract_split_features(std::any_cast<const TreeModel&>(model), data,
                                  options.importance_floor);
  };
  contract.fit = [&](const IndexSet& backbone) -> std::any {
    return fit_tree_exact(data, backbone, options.depth, options.feature_cap, options.depth_cap);
  };

  DecisionTreeOptions opts = options;
  BackboneConfig engine = opts.engine;
  engine.max_backbone_size = std::min(engine.max_backbone_size, opts.feature_cap);

  DecisionTreeResult result;
  result.engine = run_backbone(contract, engine);
  result.model = std::any_cast<TreeModel>(result.engine.model);
  return result;
}

}  // namespace backbone::trees
