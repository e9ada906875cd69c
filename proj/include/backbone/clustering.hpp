#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "backbone/core.hpp"
#include "backbone/mio.hpp"
#include "backbone/types.hpp"

namespace backbone::clustering {

struct PointSet {
  Eigen::MatrixXd X;  // n x d, rows are points

  void validate() const;
  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

struct ClusterAssignment {
  std::vector<int> assignment;  // cluster label per point, in [0, k)
  int k = 1;
  // Sum of squared distances over co-clustered pairs.
  double objective_value = 0.0;
  double optimality_gap = 0.0;
};

struct KMeansResult {
  std::vector<int> assignment;
  Eigen::MatrixXd centers;  // k x d
  double within_ss = 0.0;   // sum of squared distances to the assigned center
};

// Seeded k-means++ initialization plus Lloyd iterations, best of `restarts`
// runs; empty clusters are repaired with the farthest point.
KMeansResult kmeans_fit(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts = 3);

double pair_objective(const Eigen::MatrixXd& X, const std::vector<int>& assignment);

// Pairs co-clustered in the subproblem, mapped through `global_rows` to pair
// ids over the full point set of size total_n.
IndexSet extract_coclustered_pairs(const std::vector<int>& assignment,
                                   const IndexSet& global_rows, std::uint32_t total_n);

// Variable layout of the reduced cluster-selection program.
struct CliqueProgram {
  mio::BinaryProgram program;
  int n = 0;
  int k = 0;
  std::vector<int> z_index;  // n x k, z_index[i*k+t]
};

// Binary z_it (point i in cluster t) with continuous pair variables only for
// backbone pairs; forbidden pairs may not share a cluster. Includes symmetry
// breaking and per-cluster strengthening rows.
CliqueProgram build_reduced_clique_program(const Eigen::MatrixXd& X, const IndexSet& backbone,
                                           int k, int min_cluster_size);

ClusterAssignment fit_exact_clustering(const Eigen::MatrixXd& X, const IndexSet& backbone, int k,
                                       int min_cluster_size, double gap_tolerance = 0.0,
                                       double time_budget_sec = mio::kInf,
                                       const std::vector<int>* warm_start = nullptr);

// Mean silhouette over all points; singleton clusters score 0. Requires at
// least two occupied clusters and n >= 3.
double silhouette_score(const Eigen::MatrixXd& X, const std::vector<int>& assignment);

struct ClusteringOptions {
  BackboneConfig engine;
  int k = 2;
  int min_cluster_size = 1;
  double gap_tolerance = 0.0;
  double exact_time_budget_sec = mio::kInf;
  int kmeans_restarts = 3;
};

struct ClusteringResult {
  BackboneResult engine;
  ClusterAssignment model;
};

// Backbone pipeline: k-means on point subsets, co-clustered pairs form the
// backbone, exact cluster selection restricted to those pairs.
ClusteringResult backbone_clustering(const PointSet& data, const ClusteringOptions& options);

}  // namespace backbone::clustering
