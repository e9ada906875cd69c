#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "backbone/errors.hpp"
#include "backbone/sparse_regression.hpp"

using namespace backbone;
using namespace backbone::regression;

namespace {

IndexSet all_of(int p) {
  IndexSet s(p);
  std::iota(s.begin(), s.end(), 0u);
  return s;
}

// Independent oracle for the standardized cardinality-constrained ridge
// objective: center, scale columns to unit norm, enumerate all supports of
// size exactly k (adding variables never hurts a ridge fit on fewer).
double best_subset_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int k,
                          double lambda2) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd Xs = X.rowwise() - X.colwise().mean();
  for (int j = 0; j < p; ++j) {
    double norm = Xs.col(j).norm();
    if (norm > 1e-12) Xs.col(j) /= norm;
  }
  Eigen::VectorXd yc = y.array() - y.mean();

  double best = yc.squaredNorm();
  std::vector<int> pick(k);
  std::function<void(int, int)> rec = [&](int start, int chosen) {
    if (chosen == k) {
      Eigen::MatrixXd Xsub(n, k);
      for (int i = 0; i < k; ++i) Xsub.col(i) = Xs.col(pick[i]);
      Eigen::VectorXd b;
      if (lambda2 > 0) {
        Eigen::MatrixXd G = Xsub.transpose() * Xsub;
        G.diagonal().array() += lambda2;
        b = G.fullPivLu().solve(Xsub.transpose() * yc);
      } else {
        b = Xsub.completeOrthogonalDecomposition().solve(yc);
      }
      double obj = (yc - Xsub * b).squaredNorm() + lambda2 * b.squaredNorm();
      best = std::min(best, obj);
      return;
    }
    for (int j = start; j <= p - (k - chosen); ++j) {
      pick[chosen] = j;
      rec(j + 1, chosen + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("correlation utilities: exact match, orthogonality, scaling invariance") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  RegressionDataset data;
  data.X.resize(20, 5);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 5; ++j) data.X(i, j) = normal(rng);
  data.y = data.X.col(0);
  UtilityVector u = correlation_utilities(data);
  CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));

  // direct oracle
  Eigen::VectorXd yc = data.y.array() - data.y.mean();
  for (int j = 0; j < 5; ++j) {
    Eigen::VectorXd xc = data.X.col(j).array() - data.X.col(j).mean();
    CHECK(u[j] == doctest::Approx(std::abs(xc.dot(yc)) / (xc.norm() * yc.norm())).epsilon(1e-12));
  }

  // positive rescaling changes nothing
  RegressionDataset scaled = data;
  scaled.X.col(2) *= 37.0;
  scaled.y *= 0.01;
  UtilityVector u2 = correlation_utilities(scaled);
  for (int j = 0; j < 5; ++j) CHECK(u2[j] == doctest::Approx(u[j]).epsilon(1e-10));

  // orthogonal column
  RegressionDataset ortho;
  ortho.X.resize(4, 2);
  ortho.X << 1, 1, 1, -1, -1, 1, -1, -1;
  ortho.y.resize(4);
  ortho.y << 1, 1, -1, -1;  // equals column 0, orthogonal to column 1
  UtilityVector u3 = correlation_utilities(ortho);
  CHECK(u3[0] == doctest::Approx(1.0));
  CHECK(u3[1] == doctest::Approx(0.0));
}

TEST_CASE("identity design selects the largest response entry") {
  RegressionDataset data;
  data.X = Eigen::MatrixXd::Identity(3, 3);
  data.y.resize(3);
  data.y << 3, 1, 0;
  SparsityBudget budget;
  budget.k = 1;
  RegressionModel ls = fit_exact_regression(data, all_of(3), budget);
  CHECK(ls.support == IndexSet{0});
  // centered fit: beta = 2.5, intercept 0.5, so row 0 is reproduced exactly
  CHECK(ls.coefficients[0] == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(predict_regression(ls, data.X)[0] == doctest::Approx(3.0).epsilon(1e-10));

  // the ridge coefficient shrinks by 1/(1 + lambda2) in the standardized fit
  budget.lambda2 = 0.5;
  RegressionModel ridge = fit_exact_regression(data, all_of(3), budget);
  CHECK(ridge.support == IndexSet{0});
  CHECK(ridge.coefficients[0] == doctest::Approx(2.5 / 1.5).epsilon(1e-10));
}

TEST_CASE("unconstrained heuristic equals the ridge least-squares fit") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  RegressionDataset data;
  data.X.resize(25, 4);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 4; ++j) data.X(i, j) = normal(rng);
  data.y.resize(25);
  for (int i = 0; i < 25; ++i) data.y(i) = data.X(i, 0) - 2 * data.X(i, 2) + 0.1 * normal(rng);

  SparsityBudget budget;
  budget.k = 4;
  budget.lambda2 = 0.01;
  RegressionModel heuristic = fit_subproblem_heuristic(data, all_of(4), budget, 1);
  double oracle = best_subset_oracle(data.X, data.y, 4, budget.lambda2);
  CHECK(heuristic.objective_value == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("orthogonal design: the heuristic picks the top-k correlations") {
  // 4 orthogonal columns; y loads on columns 0 and 1 most strongly, with a
  // margin large enough to survive the internal centering
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(8, 4);
  RegressionDataset data;
  data.X = Q;
  data.y = Eigen::VectorXd::Zero(8);
  data.y(0) = 5.0;
  data.y(1) = -4.0;
  data.y(2) = 0.5;
  data.y(3) = 0.25;
  SparsityBudget budget;
  budget.k = 2;
  RegressionModel model = fit_subproblem_heuristic(data, all_of(4), budget, 3);
  CHECK(model.support == IndexSet{0, 1});
}

TEST_CASE("extraction returns the support") {
  RegressionModel model;
  model.coefficients = Eigen::VectorXd::Zero(4);
  CHECK(extract_relevant_regression(model).empty());
  model.coefficients << 0, 3.2, 0, -1;
  model.support = IndexSet{1, 3};
  CHECK(extract_relevant_regression(model) == IndexSet{1, 3});
}

TEST_CASE("heuristic support stays inside the subset and within budget") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    RegressionDataset data;
    data.X.resize(30, 12);
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 12; ++j) data.X(i, j) = normal(rng);
    data.y.resize(30);
    for (int i = 0; i < 30; ++i) data.y(i) = data.X(i, 1) + data.X(i, 7) + 0.2 * normal(rng);
    IndexSet subset{1, 3, 5, 7, 9, 11};
    SparsityBudget budget;
    budget.k = 3;
    budget.lambda2 = 0.001;
    RegressionModel model = fit_subproblem_heuristic(data, subset, budget, rng());
    CHECK(model.support.size() <= 3);
    CHECK(is_subset(model.support, subset));
  }
}

TEST_CASE("exact solver matches exhaustive enumeration") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    RegressionDataset data;
    data.X.resize(30, 10);
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 10; ++j) data.X(i, j) = normal(rng);
    data.y.resize(30);
    for (int i = 0; i < 30; ++i)
      data.y(i) = 2 * data.X(i, 0) - data.X(i, 4) + 0.5 * normal(rng);

    int k = 1 + static_cast<int>(trial % 3);
    double lambda2 = (trial % 2 == 0) ? 0.0 : 0.001;
    SparsityBudget budget;
    budget.k = k;
    budget.lambda2 = lambda2;
    RegressionModel exact = fit_exact_regression(data, all_of(10), budget);
    double oracle = best_subset_oracle(data.X, data.y, k, lambda2);
    CHECK(exact.objective_value == doctest::Approx(oracle).epsilon(1e-8));

    // heuristic on the same universe can never beat the exact optimum
    RegressionModel heuristic = fit_subproblem_heuristic(data, all_of(10), budget, 1);
    CHECK(heuristic.objective_value >= exact.objective_value - 1e-8);
  }
}

TEST_CASE("exact objective is non-increasing in k") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  RegressionDataset data;
  data.X.resize(25, 8);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 8; ++j) data.X(i, j) = normal(rng);
  data.y.resize(25);
  for (int i = 0; i < 25; ++i) data.y(i) = data.X(i, 2) + 0.3 * normal(rng);

  double prev = std::numeric_limits<double>::max();
  for (int k = 1; k <= 5; ++k) {
    SparsityBudget budget;
    budget.k = k;
    budget.lambda2 = 0.001;
    RegressionModel model = fit_exact_regression(data, all_of(8), budget);
    CHECK(model.objective_value <= prev + 1e-9);
    prev = model.objective_value;
  }
}

TEST_CASE("exact solver scale cap") {
  RegressionDataset data;
  data.X = Eigen::MatrixXd::Random(10, 5);
  data.y = Eigen::VectorXd::Random(10);
  SparsityBudget budget;
  budget.k = 1;
  CHECK_THROWS_AS(fit_exact_regression(data, all_of(5), budget, 4), SolverScaleError);
}

TEST_CASE("predict and r_squared basics") {
  RegressionModel model;
  model.coefficients = Eigen::VectorXd::Zero(3);
  model.intercept = 2.5;
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 3);
  Eigen::VectorXd pred = predict_regression(model, X);
  for (int i = 0; i < 6; ++i) CHECK(pred[i] == doctest::Approx(2.5));
  CHECK_THROWS_AS(predict_regression(model, Eigen::MatrixXd::Random(4, 2)), InvalidInputError);

  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  CHECK(r_squared(y, y) == doctest::Approx(1.0));
  Eigen::VectorXd mean_pred = Eigen::VectorXd::Constant(4, 2.5);
  CHECK(r_squared(y, mean_pred) == doctest::Approx(0.0));
  Eigen::VectorXd constant = Eigen::VectorXd::Constant(4, 1.0);
  CHECK_THROWS_AS(r_squared(constant, y), UndefinedMetricError);
}

TEST_CASE("backbone pipeline recovers a planted support") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  RegressionDataset data;
  data.X.resize(80, 30);
  for (int i = 0; i < 80; ++i)
    for (int j = 0; j < 30; ++j) data.X(i, j) = normal(rng);
  data.y.resize(80);
  for (int i = 0; i < 80; ++i)
    data.y(i) = data.X(i, 3) + data.X(i, 17) + 0.05 * normal(rng);

  SparseRegressionOptions opts;
  opts.engine.num_subproblems = 4;
  opts.engine.screening_fraction = 0.5;
  opts.engine.subproblem_fraction = 0.5;
  opts.engine.max_backbone_size = 10;
  opts.budget.k = 2;
  opts.budget.lambda2 = 0.001;
  SparseRegressionResult result = backbone_sparse_regression(data, opts);
  CHECK(result.model.support == IndexSet{3, 17});
  CHECK(is_subset(result.model.support, result.engine.backbone));
}
