#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "backbone/clustering.hpp"
#include "backbone/sparse_regression.hpp"
#include "backbone/types.hpp"

namespace backbone::datagen {

struct SparseRegressionData {
  regression::RegressionDataset data;
  IndexSet true_support;
};

// X ~ iid N(0,1); true beta is 1 on k equispaced indices; noise variance is
// var(X beta) / snr, estimated on the realized sample.
SparseRegressionData gen_sparse_regression(int n, int p, int k, double snr, std::uint64_t seed);

struct ClassificationData {
  Eigen::MatrixXd raw;  // n x p
  std::vector<std::uint8_t> labels;
  IndexSet true_features;  // the k informative raw columns
};

// 2k Gaussian clusters in the k informative dimensions (centers on a scaled
// hypercube), classes alternating by cluster, round-robin assignment; nuisance
// dimensions mix noise with random combinations of the informative ones;
// labels flip with probability noise_rate.
ClassificationData gen_classification(int n, int p, int k, double noise_rate, std::uint64_t seed);

struct ClusterBlobData {
  clustering::PointSet points;
  std::vector<int> true_assignment;
  int target_k = 1;
};

// true_k isotropic blobs with standard deviation `spread`, centers on a fixed
// separated grid, round-robin blob sizes.
ClusterBlobData gen_cluster_blobs(int n, int d, int true_k, int target_k, double spread,
                                  std::uint64_t seed);

}  // namespace backbone::datagen
