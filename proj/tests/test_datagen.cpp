#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "backbone/bench.hpp"
#include "backbone/csv.hpp"
#include "backbone/datagen.hpp"
#include "backbone/errors.hpp"
#include "backbone/trees.hpp"

using namespace backbone;
using namespace backbone::datagen;

namespace {

double adjusted_rand(const std::vector<int>& a, const std::vector<int>& b) {
  int ka = *std::max_element(a.begin(), a.end()) + 1;
  int kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<std::vector<std::int64_t>> table(ka, std::vector<std::int64_t>(kb, 0));
  for (std::size_t i = 0; i < a.size(); ++i) table[a[i]][b[i]]++;
  auto choose2 = [](std::int64_t m) { return m * (m - 1) / 2; };
  std::int64_t sum_ij = 0, sum_a = 0, sum_b = 0;
  for (int i = 0; i < ka; ++i) {
    std::int64_t row = 0;
    for (int j = 0; j < kb; ++j) {
      sum_ij += choose2(table[i][j]);
      row += table[i][j];
    }
    sum_a += choose2(row);
  }
  for (int j = 0; j < kb; ++j) {
    std::int64_t col = 0;
    for (int i = 0; i < ka; ++i) col += table[i][j];
    sum_b += choose2(col);
  }
  double total = static_cast<double>(choose2(static_cast<std::int64_t>(a.size())));
  double expected = static_cast<double>(sum_a) * sum_b / total;
  double max_index = 0.5 * (sum_a + sum_b);
  return (sum_ij - expected) / (max_index - expected);
}

}  // namespace

TEST_CASE("regression generator: determinism, support, noiseless limit") {
  auto a = gen_sparse_regression(50, 20, 4, 5.0, 42);
  auto b = gen_sparse_regression(50, 20, 4, 5.0, 42);
  CHECK(a.data.X == b.data.X);
  CHECK(a.data.y == b.data.y);
  CHECK(a.true_support.size() == 4);
  auto c = gen_sparse_regression(50, 20, 4, 5.0, 43);
  CHECK(a.data.y != c.data.y);

  // snr -> infinity: least squares on the true support explains everything
  auto clean = gen_sparse_regression(100, 10, 3, 1e9, 7);
  Eigen::MatrixXd Xs(100, 3);
  for (int i = 0; i < 3; ++i) Xs.col(i) = clean.data.X.col(clean.true_support[i]);
  Eigen::VectorXd beta = Xs.colPivHouseholderQr().solve(clean.data.y);
  double ss_res = (clean.data.y - Xs * beta).squaredNorm();
  double mean = clean.data.y.mean();
  double ss_tot = (clean.data.y.array() - mean).square().sum();
  CHECK(1.0 - ss_res / ss_tot == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("regression generator: realized snr tracks the request") {
  auto data = gen_sparse_regression(10000, 12, 4, 3.0, 101);
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(10000);
  for (IndicatorId j : data.true_support) signal += data.data.X.col(j);
  Eigen::VectorXd noise = data.data.y - signal;
  double var_signal = (signal.array() - signal.mean()).square().sum() / 9999;
  double var_noise = (noise.array() - noise.mean()).square().sum() / 9999;
  CHECK(var_signal / var_noise == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("classification generator: balance, separability, flip rate") {
  auto clean = gen_classification(128, 10, 2, 0.0, 5);
  CHECK(clean.true_features == IndexSet{0, 1});
  std::int64_t positives = std::count(clean.labels.begin(), clean.labels.end(), 1);
  CHECK(std::abs(positives - (128 - positives)) <= 1);

  // noise-free clusters are separable by a depth-2 tree on informative features
  auto bin = trees::binarize(clean.raw, clean.labels, 3);
  IndexSet informative;
  for (int c = 0; c < bin.p; ++c)
    if (bin.binarization_map[c].source_feature < 2)
      informative.push_back(static_cast<IndicatorId>(c));
  trees::TreeModel tree = trees::fit_tree_exact(bin, informative, 2, 24, 3);
  CHECK(tree.misclassification_count == 0);

  // flip fraction within 3 sigma of the binomial expectation; the noise-free
  // twin with the same seed shares the random stream, so differences = flips
  auto noisy = gen_classification(2000, 10, 2, 0.2, 5);
  auto twin = gen_classification(2000, 10, 2, 0.0, 5);
  int flips = 0;
  for (int i = 0; i < 2000; ++i) flips += twin.labels[i] != noisy.labels[i];
  double expected = 0.2 * 2000;
  double sigma = std::sqrt(2000 * 0.2 * 0.8);
  CHECK(std::abs(flips - expected) <= 3 * sigma);
}

TEST_CASE("blob generator: sizes, recovery, degenerate spread") {
  auto blobs = gen_cluster_blobs(31, 2, 3, 5, 0.2, 9);
  CHECK(blobs.target_k == 5);
  std::vector<int> sizes(3, 0);
  for (int a : blobs.true_assignment) ++sizes[a];
  CHECK(*std::max_element(sizes.begin(), sizes.end()) -
            *std::min_element(sizes.begin(), sizes.end()) <=
        1);

  auto km = clustering::kmeans_fit(blobs.points.X, 3, 4);
  CHECK(adjusted_rand(blobs.true_assignment, km.assignment) == doctest::Approx(1.0));

  auto tight = gen_cluster_blobs(12, 2, 2, 2, 1e-9, 3);
  CHECK(clustering::silhouette_score(tight.points.X, tight.true_assignment) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("generator input validation") {
  CHECK_THROWS_AS(gen_sparse_regression(10, 5, 6, 1.0, 0), InvalidInputError);
  CHECK_THROWS_AS(gen_sparse_regression(10, 5, 2, 0.0, 0), InvalidInputError);
  CHECK_THROWS_AS(gen_classification(10, 5, 2, 0.5, 0), InvalidInputError);
  CHECK_THROWS_AS(gen_cluster_blobs(10, 2, 5, 3, 1.0, 0), InvalidInputError);
}

TEST_CASE("benchmark harness: determinism and internal consistency") {
  bench::ExperimentSpec spec;
  spec.problem = bench::Problem::SparseRegression;
  spec.n = 40;
  spec.p = 15;
  spec.k = 2;
  spec.noise = 5.0;
  spec.repetitions = 2;
  spec.seed = 77;
  bench::MethodSpec heuristic;
  heuristic.name = "iht";
  heuristic.kind = bench::MethodKind::HeuristicBaseline;
  bench::MethodSpec bb;
  bb.name = "backbone";
  bb.kind = bench::MethodKind::Backbone;
  bb.config.num_subproblems = 3;
  bb.config.max_backbone_size = 8;
  spec.methods = {heuristic, bb};

  bench::ExperimentReport r1 = bench::run_benchmark(spec);
  bench::ExperimentReport r2 = bench::run_benchmark(spec);
  REQUIRE(r1.raw.size() == 4);
  REQUIRE(r1.rows.size() == 2);
  for (std::size_t i = 0; i < r1.raw.size(); ++i) {
    CHECK(r1.raw[i].accuracy == r2.raw[i].accuracy);
    CHECK(r1.raw[i].time_sec >= 0.0);
  }

  // aggregate rows are the means of the raw records
  for (const bench::AggregateRow& row : r1.rows) {
    double acc = 0, time = 0;
    int count = 0;
    for (const bench::BenchRecord& rec : r1.raw)
      if (rec.method == row.method) {
        acc += rec.accuracy;
        time += rec.time_sec;
        ++count;
      }
    CHECK(row.accuracy == doctest::Approx(acc / count).epsilon(1e-9));
    CHECK(row.time_sec == doctest::Approx(time / count).epsilon(1e-9));
  }

  // CSV shape: header plus one line per method; engine columns only for backbone
  std::ostringstream csv_out;
  bench::write_report_csv(r1, csv_out);
  std::string csv_text = csv_out.str();
  CHECK(csv_text.rfind("problem,method,M,alpha,beta,accuracy,time_sec,backbone_size\n", 0) == 0);
  CHECK(csv_text.find("sparse_regression,iht,,,") != std::string::npos);
  CHECK(csv_text.find("sparse_regression,backbone,3,") != std::string::npos);
}

TEST_CASE("csv reader: header detection and errors") {
  std::istringstream with_header("a,b,c\n1,2,3\n4,5,6\n");
  csv::Table t = csv::read_csv(with_header);
  CHECK(t.has_header);
  CHECK(t.column_names == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.values.rows() == 2);
  CHECK(t.values(1, 2) == doctest::Approx(6.0));

  std::istringstream plain("1,2\n3,4\n");
  csv::Table u = csv::read_csv(plain);
  CHECK_FALSE(u.has_header);
  CHECK(u.values.rows() == 2);

  std::istringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(csv::read_csv(ragged), InvalidInputError);
  std::istringstream bad("1,2\n3,x\n");
  CHECK_THROWS_AS(csv::read_csv(bad), InvalidInputError);
  std::istringstream empty("");
  CHECK_THROWS_AS(csv::read_csv(empty), InvalidInputError);
}
