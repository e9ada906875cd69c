#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "backbone/errors.hpp"
#include "backbone/trees.hpp"

using namespace backbone;
using namespace backbone::trees;

namespace {

BinaryClassificationDataset random_dataset(int n, int p, std::mt19937_64& rng) {
  BinaryClassificationDataset data;
  data.n = n;
  data.p = p;
  data.features.resize(static_cast<std::size_t>(n) * p);
  data.labels.resize(n);
  for (auto& v : data.features) v = static_cast<std::uint8_t>(rng() % 2);
  for (auto& v : data.labels) v = static_cast<std::uint8_t>(rng() % 2);
  return data;
}

// Exhaustive oracle for depth-2 trees: every assignment of backbone features
// to the 3 internal nodes, leaves labeled by majority.
int brute_force_depth2(const BinaryClassificationDataset& data, const IndexSet& backbone) {
  int best = data.n + 1;
  for (IndicatorId f0 : backbone)
    for (IndicatorId f1 : backbone)
      for (IndicatorId f2 : backbone) {
        int pos[4] = {0, 0, 0, 0}, tot[4] = {0, 0, 0, 0};
        for (int i = 0; i < data.n; ++i) {
          int right0 = data.at(i, static_cast<int>(f0));
          int right1 = right0 ? data.at(i, static_cast<int>(f2))
                              : data.at(i, static_cast<int>(f1));
          int leaf = 2 * right0 + right1;
          tot[leaf] += 1;
          pos[leaf] += data.labels[i];
        }
        int err = 0;
        for (int l = 0; l < 4; ++l) err += std::min(pos[l], tot[l] - pos[l]);
        best = std::min(best, err);
      }
  return best;
}

double auc_pair_oracle(const std::vector<std::uint8_t>& labels, const std::vector<double>& s) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[i] != 1 || labels[j] != 0) continue;
      ++pairs;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("gini impurity values") {
  CHECK(gini_impurity(0, 10) == doctest::Approx(0.0));
  CHECK(gini_impurity(10, 10) == doctest::Approx(0.0));
  CHECK(gini_impurity(5, 10) == doctest::Approx(0.5));
  CHECK(gini_impurity(3, 10) == doctest::Approx(0.42));
  CHECK(gini_impurity(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("binarize quantile cuts") {
  Eigen::MatrixXd raw(4, 1);
  raw << 1, 2, 3, 4;
  std::vector<std::uint8_t> labels{0, 0, 1, 1};
  BinaryClassificationDataset data = binarize(raw, labels, 1);
  REQUIRE(data.p == 1);
  CHECK(data.binarization_map[0].threshold == doctest::Approx(2.5));
  CHECK(data.at(0, 0) == 0);
  CHECK(data.at(1, 0) == 0);
  CHECK(data.at(2, 0) == 1);
  CHECK(data.at(3, 0) == 1);

  // constant column: every cut equals the value, nothing exceeds it
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(5, 1, 7.0);
  std::vector<std::uint8_t> l5{0, 1, 0, 1, 0};
  BinaryClassificationDataset flat_bin = binarize(flat, l5, 3);
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < 3; ++c) CHECK(flat_bin.at(i, c) == 0);
}

TEST_CASE("apply_cuts reproduces binarize on the same data") {
  std::mt19937_64 rng(3);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Random(12, 3);
  std::vector<std::uint8_t> labels(12);
  for (auto& v : labels) v = static_cast<std::uint8_t>(rng() % 2);
  auto a = binarize(raw, labels, 2);
  auto b = apply_cuts(raw, labels, a.binarization_map);
  CHECK(a.features == b.features);
}

TEST_CASE("greedy finds a perfect single split") {
  BinaryClassificationDataset data;
  data.n = 6;
  data.p = 2;
  // feature 0 equals the label, feature 1 is junk
  data.features = {1, 1, 1, 0, 1, 1, 0, 0, 0, 1, 0, 0};
  data.labels = {1, 1, 1, 0, 0, 0};
  TreeModel model = fit_tree_greedy(data, IndexSet{0, 1}, 1);
  CHECK(model.split_feature[0] == 0);
  CHECK(model.misclassification_count == 0);
  CHECK(model.count_errors(data) == 0);
}

TEST_CASE("greedy breaks ties toward the lower feature index") {
  BinaryClassificationDataset data;
  data.n = 4;
  data.p = 2;
  // identical columns: equal Gini decrease
  data.features = {1, 1, 1, 1, 0, 0, 0, 0};
  data.labels = {1, 1, 0, 0};
  TreeModel model = fit_tree_greedy(data, IndexSet{0, 1}, 1);
  CHECK(model.split_feature[0] == 0);
}

TEST_CASE("pure node becomes no-op padding") {
  BinaryClassificationDataset data;
  data.n = 4;
  data.p = 1;
  data.features = {0, 0, 1, 1};
  data.labels = {0, 0, 0, 0};
  TreeModel model = fit_tree_greedy(data, IndexSet{0}, 2);
  CHECK(model.split_feature[0] == -1);
  CHECK(model.misclassification_count == 0);
  CHECK(extract_split_features(model, data).empty());
}

TEST_CASE("exact matches the brute-force oracle on depth 2") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    BinaryClassificationDataset data = random_dataset(40, 6, rng);
    IndexSet backbone{0, 1, 2, 3, 4, 5};
    TreeModel model = fit_tree_exact(data, backbone, 2);
    CHECK(model.misclassification_count == brute_force_depth2(data, backbone));
    CHECK(model.count_errors(data) == model.misclassification_count);
  }
}

TEST_CASE("exact error never exceeds greedy and never worsens with depth") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    BinaryClassificationDataset data = random_dataset(30, 5, rng);
    IndexSet backbone{0, 1, 2, 3, 4};
    TreeModel greedy = fit_tree_greedy(data, backbone, 2);
    TreeModel exact1 = fit_tree_exact(data, backbone, 1);
    TreeModel exact2 = fit_tree_exact(data, backbone, 2);
    CHECK(exact2.misclassification_count <= greedy.misclassification_count);
    CHECK(exact2.misclassification_count <= exact1.misclassification_count);
  }
}

TEST_CASE("importance is a distribution over the effective split features") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    BinaryClassificationDataset data = random_dataset(50, 8, rng);
    IndexSet backbone{0, 1, 2, 3, 4, 5, 6, 7};
    TreeModel model = fit_tree_greedy(data, backbone, 2);
    FeatureImportance imp = tree_feature_importance(model, data);
    double sum = 0.0;
    for (double v : imp) {
      CHECK(v >= 0.0);
      sum += v;
    }
    if (sum > 0) CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    IndexSet extracted = extract_split_features(model, data);
    IndexSet positive;
    for (int f = 0; f < data.p; ++f)
      if (imp[f] > 0) positive.push_back(static_cast<IndicatorId>(f));
    CHECK(extracted == positive);
  }
}

TEST_CASE("exact solver caps") {
  std::mt19937_64 rng(53);
  BinaryClassificationDataset data = random_dataset(10, 30, rng);
  IndexSet wide(30);
  std::iota(wide.begin(), wide.end(), 0u);
  CHECK_THROWS_AS(fit_tree_exact(data, wide, 2, 24, 3), SolverScaleError);
  IndexSet small{0, 1};
  CHECK_THROWS_AS(fit_tree_exact(data, small, 4, 24, 3), SolverScaleError);
}

TEST_CASE("auc matches the quadratic pair oracle and ranking invariance") {
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 30;
    std::vector<std::uint8_t> labels(n);
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = static_cast<std::uint8_t>(rng() % 2);
      scores[i] = std::round(unit(rng) * 5) / 5.0;  // coarse grid forces ties
    }
    labels[0] = 0;
    labels[1] = 1;
    double a = auc(labels, scores);
    CHECK(a == doctest::Approx(auc_pair_oracle(labels, scores)).epsilon(1e-12));

    // strictly increasing transform preserves the ranking, hence the AUC
    std::vector<double> warped(n);
    for (int i = 0; i < n; ++i) warped[i] = std::exp(3.0 * scores[i]) - 1.0;
    CHECK(auc(labels, warped) == doctest::Approx(a).epsilon(1e-12));
  }

  std::vector<std::uint8_t> one_class{1, 1, 1};
  std::vector<double> s{0.1, 0.2, 0.3};
  CHECK_THROWS_AS(auc(one_class, s), UndefinedMetricError);
}

TEST_CASE("backbone pipeline isolates the informative features") {
  std::mt19937_64 rng(61);
  BinaryClassificationDataset data;
  data.n = 120;
  data.p = 12;
  data.features.resize(static_cast<std::size_t>(data.n) * data.p);
  data.labels.resize(data.n);
  for (int i = 0; i < data.n; ++i) {
    for (int j = 0; j < data.p; ++j)
      data.features[static_cast<std::size_t>(i) * data.p + j] =
          static_cast<std::uint8_t>(rng() % 2);
    // label = feature 2 OR feature 9, learnable exactly at depth 2
    data.labels[i] = static_cast<std::uint8_t>(data.at(i, 2) | data.at(i, 9));
  }
  DecisionTreeOptions opts;
  opts.engine.num_subproblems = 4;
  opts.engine.screening_fraction = 1.0;
  opts.engine.subproblem_fraction = 0.6;
  opts.engine.max_backbone_size = 6;
  opts.depth = 2;
  DecisionTreeResult result = backbone_decision_tree(data, opts);
  CHECK(result.model.misclassification_count == 0);
}
