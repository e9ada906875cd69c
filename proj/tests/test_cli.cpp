#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "backbone/clustering.hpp"
#include "backbone/csv.hpp"
#include "backbone/datagen.hpp"
#include "backbone/sparse_regression.hpp"
#include "backbone/trees.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace backbone;

namespace {

std::string g_cli;
fs::path g_dir;

int run_cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = g_cli + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
  cmd += " 2> /dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

double summary_value(const std::string& text, const std::string& key) {
  auto pos = text.find(key + "=");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size() + 1));
}

void write_regression_csv(const fs::path& p) {
  auto gen = datagen::gen_sparse_regression(60, 8, 2, 10.0, 5);
  std::ofstream out(p);
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 8; ++j) out << gen.data.X(i, j) << ",";
    out << gen.data.y(i) << "\n";
  }
}

void write_tree_csv(const fs::path& p) {
  auto gen = datagen::gen_classification(80, 6, 2, 0.05, 9);
  std::ofstream out(p);
  out << "f0,f1,f2,f3,f4,f5,label\n";  // exercises header detection
  for (int i = 0; i < 80; ++i) {
    for (int j = 0; j < 6; ++j) out << gen.raw(i, j) << ",";
    out << static_cast<int>(gen.labels[i]) << "\n";
  }
}

void write_cluster_csv(const fs::path& p, int n) {
  auto gen = datagen::gen_cluster_blobs(n, 2, 3, 3, 0.3, 11);
  std::ofstream out(p);
  for (int i = 0; i < n; ++i) out << gen.points.X(i, 0) << "," << gen.points.X(i, 1) << "\n";
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("fit-regression --input x.csv --no-such-flag") == 2);
  CHECK(run_cli("no-such-subcommand") == 2);
}

TEST_CASE("data errors exit 3") {
  CHECK(run_cli("fit-regression --input " + (g_dir / "missing.csv").string()) == 3);
  fs::path bad = g_dir / "bad.csv";
  std::ofstream(bad) << "1,2\n3,oops\n";
  CHECK(run_cli("fit-regression --input " + bad.string() + " --output " +
                (g_dir / "o.json").string()) == 3);
}

TEST_CASE("infeasible cluster sizes exit 4") {
  fs::path input = g_dir / "points.csv";
  write_cluster_csv(input, 5);
  int code = run_cli("fit-cluster --input " + input.string() + " --clusters 3" +
                     " --min-cluster-size 2 --output " + (g_dir / "c.json").string());
  CHECK(code == 4);
}

TEST_CASE("fit-regression round-trip and byte-identical output") {
  fs::path input = g_dir / "reg.csv";
  write_regression_csv(input);
  fs::path model_path = g_dir / "reg_model.json";
  fs::path stdout_path = g_dir / "reg_stdout.txt";
  std::string args = "fit-regression --input " + input.string() + " --output " +
                     model_path.string() +
                     " --max-nonzeros 2 --lambda2 0.001 --seed 3 --num-subproblems 3";
  REQUIRE(run_cli(args, stdout_path) == 0);
  std::string first = slurp(model_path);

  json j = json::parse(first);
  CHECK(j.at("schema_version") == 1);
  csv::Table table = csv::read_csv_file(input.string());
  Eigen::MatrixXd X = table.values.leftCols(table.values.cols() - 1);
  Eigen::VectorXd y = table.values.col(table.values.cols() - 1);
  regression::RegressionModel model;
  std::vector<double> coef = j.at("coefficients").get<std::vector<double>>();
  model.coefficients = Eigen::Map<Eigen::VectorXd>(coef.data(), coef.size());
  model.intercept = j.at("intercept").get<double>();
  double r2 = regression::r_squared(y, regression::predict_regression(model, X));
  CHECK(r2 == doctest::Approx(summary_value(slurp(stdout_path), "r2")).epsilon(1e-9));

  REQUIRE(run_cli(args, stdout_path) == 0);
  CHECK(slurp(model_path) == first);
}

TEST_CASE("fit-tree round-trip") {
  fs::path input = g_dir / "tree.csv";
  write_tree_csv(input);
  fs::path model_path = g_dir / "tree_model.json";
  fs::path stdout_path = g_dir / "tree_stdout.txt";
  REQUIRE(run_cli("fit-tree --input " + input.string() + " --output " + model_path.string() +
                      " --depth 2 --bins 2 --seed 1",
                  stdout_path) == 0);

  json j = json::parse(slurp(model_path));
  trees::TreeModel model;
  model.depth = j.at("depth").get<int>();
  model.split_feature = j.at("split_feature").get<std::vector<int>>();
  model.leaf_positive_fraction = j.at("leaf_positive_fraction").get<std::vector<double>>();
  std::vector<trees::BinarizationCut> cuts;
  for (const json& jc : j.at("binarization_map"))
    cuts.push_back({jc.at("source_feature").get<int>(), jc.at("threshold").get<double>()});

  csv::Table table = csv::read_csv_file(input.string());
  Eigen::MatrixXd raw = table.values.leftCols(table.values.cols() - 1);
  std::vector<std::uint8_t> labels(table.values.rows());
  for (Eigen::Index i = 0; i < table.values.rows(); ++i)
    labels[i] = static_cast<std::uint8_t>(table.values(i, table.values.cols() - 1));
  auto data = trees::apply_cuts(raw, labels, cuts);
  std::vector<double> scores(data.n);
  for (int i = 0; i < data.n; ++i) scores[i] = model.score(data, i);
  CHECK(trees::auc(labels, scores) ==
        doctest::Approx(summary_value(slurp(stdout_path), "auc")).epsilon(1e-9));
}

TEST_CASE("fit-cluster round-trip") {
  fs::path input = g_dir / "cluster.csv";
  write_cluster_csv(input, 15);
  fs::path model_path = g_dir / "cluster_model.json";
  fs::path stdout_path = g_dir / "cluster_stdout.txt";
  REQUIRE(run_cli("fit-cluster --input " + input.string() + " --output " + model_path.string() +
                      " --clusters 3 --beta 1.0 --num-subproblems 3 --max-backbone-size 200",
                  stdout_path) == 0);

  json j = json::parse(slurp(model_path));
  std::vector<int> assignment = j.at("assignment").get<std::vector<int>>();
  csv::Table table = csv::read_csv_file(input.string());
  double sil = clustering::silhouette_score(table.values, assignment);
  CHECK(sil == doctest::Approx(summary_value(slurp(stdout_path), "silhouette")).epsilon(1e-9));
  CHECK(j.at("optimality_gap").get<double>() <= 0.01 + 1e-12);
}

TEST_CASE("benchmark subcommand writes matching reports") {
  fs::path spec_path = g_dir / "spec.json";
  std::ofstream(spec_path) << R"({
    "problem": "sparse_regression", "n": 40, "p": 10, "k": 2, "noise": 5.0,
    "repetitions": 2, "seed": 3,
    "methods": [
      {"name": "iht", "kind": "heuristic_baseline"},
      {"name": "bb", "kind": "backbone",
       "config": {"num_subproblems": 3, "max_backbone_size": 6}}
    ]
  })";
  fs::path report = g_dir / "report";
  REQUIRE(run_cli("benchmark --input " + spec_path.string() + " --output " + report.string()) ==
          0);
  std::string csv_first = slurp(report.string() + ".csv");
  std::string json_first = slurp(report.string() + ".json");
  CHECK(csv_first.rfind("problem,method,M,alpha,beta,accuracy,time_sec,backbone_size\n", 0) == 0);
  CHECK(json::parse(json_first).at("raw").size() == 4);

  // identical spec, identical CSV (JSON embeds wall times, CSV rows do too, so
  // compare the deterministic columns)
  REQUIRE(run_cli("benchmark --input " + spec_path.string() + " --output " + report.string()) ==
          0);
  json a = json::parse(json_first);
  json b = json::parse(slurp(report.string() + ".json"));
  for (std::size_t i = 0; i < a.at("raw").size(); ++i)
    CHECK(a.at("raw")[i].at("accuracy") == b.at("raw")[i].at("accuracy"));
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-cli-binary>\n");
    return 1;
  }
  g_cli = argv[1];
  g_dir = fs::temp_directory_path() / "backbone_cli_test";
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);
  doctest::Context context(1, argv);
  int rc = context.run();
  fs::remove_all(g_dir);
  return rc;
}
