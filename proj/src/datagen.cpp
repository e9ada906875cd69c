#include "backbone/datagen.hpp"

#include <cmath>
#include <random>

#include "backbone/errors.hpp"
#include "backbone/rng.hpp"

namespace backbone::datagen {

SparseRegressionData gen_sparse_regression(int n, int p, int k, double snr, std::uint64_t seed) {
  if (n < 2 || p < 1 || k < 1 || k > p)
    throw InvalidInputError("gen_sparse_regression: need n >= 2, 1 <= k <= p");
  if (!(snr > 0)) throw InvalidInputError("gen_sparse_regression: snr must be > 0");

  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SparseRegressionData out;
  out.data.X.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) out.data.X(i, j) = normal(rng);

  for (int j = 0; j < k; ++j)
    out.true_support.push_back(static_cast<IndicatorId>(static_cast<std::int64_t>(j) * p / k));

  Eigen::VectorXd signal = Eigen::VectorXd::Zero(n);
  for (IndicatorId j : out.true_support) signal += out.data.X.col(j);
  double mean = signal.mean();
  double var = (signal.array() - mean).square().sum() / (n - 1);
  double sigma = std::sqrt(var / snr);
  out.data.y = signal;
  for (int i = 0; i < n; ++i) out.data.y(i) += sigma * normal(rng);
  return out;
}

ClassificationData gen_classification(int n, int p, int k, double noise_rate, std::uint64_t seed) {
  if (n < 2 || p < 1 || k < 1 || k > p)
    throw InvalidInputError("gen_classification: need n >= 2, 1 <= k <= p");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5))
    throw InvalidInputError("gen_classification: noise_rate must be in [0, 0.5)");

  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int num_clusters = 2 * k;
  const double separation = 6.0;
  const double cluster_sd = 0.5;

  // cluster c sits at the hypercube corner given by the bits of c
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(num_clusters, k);
  for (int c = 0; c < num_clusters; ++c)
    for (int t = 0; t < k; ++t)
      if ((c >> t) & 1) centers(c, t) = separation;

  ClassificationData out;
  out.raw.resize(n, p);
  out.labels.resize(n);
  for (int t = 0; t < k; ++t) out.true_features.push_back(static_cast<IndicatorId>(t));

  // nuisance mixing weights, fixed per dataset
  Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(p, k);
  for (int j = k; j < p; ++j)
    for (int t = 0; t < k; ++t) mix(j, t) = 0.5 * normal(rng);

  for (int i = 0; i < n; ++i) {
    int c = i % num_clusters;  // round-robin keeps classes balanced
    for (int t = 0; t < k; ++t) out.raw(i, t) = centers(c, t) + cluster_sd * normal(rng);
    for (int j = k; j < p; ++j) {
      double v = normal(rng);
      for (int t = 0; t < k; ++t) v += mix(j, t) * out.raw(i, t);
      out.raw(i, j) = v;
    }
    std::uint8_t label = static_cast<std::uint8_t>(c % 2);
    if (unit(rng) < noise_rate) label ^= 1;
    out.labels[i] = label;
  }
  return out;
}

ClusterBlobData gen_cluster_blobs(int n, int d, int true_k, int target_k, double spread,
                                  std::uint64_t seed) {
  if (n < 2 || d < 1) throw InvalidInputError("gen_cluster_blobs: need n >= 2, d >= 1");
  if (true_k < 1 || true_k > target_k || target_k > n)
    throw InvalidInputError("gen_cluster_blobs: need 1 <= true_k <= target_k <= n");
  if (!(spread >= 0)) throw InvalidInputError("gen_cluster_blobs: spread must be >= 0");

  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double separation = 10.0;

  // distinct grid corners: axis index cycles, magnitude grows each cycle
  Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(true_k, d);
  for (int c = 0; c < true_k; ++c) centers(c, c % d) = separation * (1 + c / d);

  ClusterBlobData out;
  out.target_k = target_k;
  out.points.X.resize(n, d);
  out.true_assignment.resize(n);
  for (int i = 0; i < n; ++i) {
    int c = i % true_k;
    out.true_assignment[i] = c;
    for (int j = 0; j < d; ++j) out.points.X(i, j) = centers(c, j) + spread * normal(rng);
  }
  return out;
}

}  // namespace backbone::datagen
