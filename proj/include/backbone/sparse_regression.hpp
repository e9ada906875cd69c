#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "backbone/core.hpp"
#include "backbone/types.hpp"

namespace backbone::regression {

struct RegressionDataset {
  Eigen::MatrixXd X;  // n x p, rows are samples
  Eigen::VectorXd y;  // length n

  void validate() const;
  int n() const { return static_cast<int>(X.rows()); }
  int p() const { return static_cast<int>(X.cols()); }
};

struct SparsityBudget {
  int k = 1;            // final-fit sparsity (max_nonzeros)
  int k_m = 0;          // per-subproblem budget; 0 means "same as k"
  double lambda2 = 0.0; // ridge parameter

  int subproblem_k() const { return k_m > 0 ? k_m : k; }
};

struct RegressionModel {
  Eigen::VectorXd coefficients;  // length p, original scale, zero off-support
  IndexSet support;
  double intercept = 0.0;
  // Ridge objective ||y_c - X_c b||^2 + lambda2 ||b||^2 on the internally
  // standardized (centered, unit-column-norm) data; comparable across the
  // heuristic and exact fits.
  double objective_value = 0.0;
  double optimality_gap = 0.0;
};

// utility_j = |X_j . y| / (||X_j|| ||y||) after centering, in [0, 1];
// zero-norm columns get utility 0.
UtilityVector correlation_utilities(const RegressionDataset& data);

// Iterative hard thresholding restricted to `subset`, then local swap
// refinement with exact ridge refits until no swap strictly improves.
RegressionModel fit_subproblem_heuristic(const RegressionDataset& data, const IndexSet& subset,
                                         const SparsityBudget& budget, std::uint64_t seed);

IndexSet extract_relevant_regression(const RegressionModel& model);

// Global optimum of the cardinality-constrained ridge problem restricted to
// `backbone`, via best-bound branch-and-bound over supports.
RegressionModel fit_exact_regression(const RegressionDataset& data, const IndexSet& backbone,
                                     const SparsityBudget& budget, int exact_cap = 64);

Eigen::VectorXd predict_regression(const RegressionModel& model, const Eigen::MatrixXd& X_new);

double r_squared(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

struct SparseRegressionOptions {
  BackboneConfig engine;
  SparsityBudget budget;
  int exact_cap = 64;
};

struct SparseRegressionResult {
  BackboneResult engine;
  RegressionModel model;
};

// Full backbone pipeline: correlation screening, IHT subproblem fits,
// support-union backbone, exact reduced fit.
SparseRegressionResult backbone_sparse_regression(const RegressionDataset& data,
                                                  const SparseRegressionOptions& options);

}  // namespace backbone::regression
