#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "backbone/bench.hpp"
#include "backbone/clustering.hpp"
#include "backbone/csv.hpp"
#include "backbone/errors.hpp"
#include "backbone/sparse_regression.hpp"
#include "backbone/trees.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace backbone;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;
constexpr int kExitBudget = 5;

struct CommonFlags {
  std::string input;
  std::string output = "model.json";
  double alpha = 0.5;
  double beta = 0.5;
  int num_subproblems = 5;
  int max_backbone_size = 50;
  std::uint64_t seed = 0;
  double time_budget = 0.0;  // 0 disables the engine budget
  bool verbose = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--input", f.input, "input CSV file")->required();
  cmd->add_option("--output", f.output, "output JSON path");
  cmd->add_option("--alpha", f.alpha, "screening fraction retained");
  cmd->add_option("--beta", f.beta, "fraction of retained indicators per subproblem");
  cmd->add_option("--num-subproblems", f.num_subproblems, "initial subproblem count M");
  cmd->add_option("--max-backbone-size", f.max_backbone_size, "backbone size cap");
  cmd->add_option("--seed", f.seed, "master random seed");
  cmd->add_option("--time-budget", f.time_budget, "engine time budget in seconds");
  cmd->add_flag("--verbose", f.verbose, "print per-iteration trace lines");
}

BackboneConfig engine_config(const CommonFlags& f) {
  BackboneConfig config;
  config.num_subproblems = f.num_subproblems;
  config.screening_fraction = f.alpha;
  config.subproblem_fraction = f.beta;
  config.max_backbone_size = f.max_backbone_size;
  config.master_seed = f.seed;
  if (f.time_budget > 0) config.time_budget_sec = f.time_budget;
  return config;
}

void print_trace(const BackboneResult& result) {
  for (const IterationRecord& r : result.trace)
    std::cerr << "t=" << r.t << " M_t=" << r.num_subproblems << " |U|=" << r.retained_size
              << " |B|=" << r.backbone_size << " elapsed=" << r.elapsed_sec << "\n";
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot open output file " + path);
  out << j.dump(2) << "\n";
}

std::vector<std::uint8_t> binary_labels(const Eigen::MatrixXd& col) {
  std::vector<std::uint8_t> labels(col.rows());
  for (Eigen::Index i = 0; i < col.rows(); ++i) {
    double v = col(i, 0);
    if (v != 0.0 && v != 1.0)
      throw InvalidInputError("label column must contain only 0 and 1");
    labels[i] = static_cast<std::uint8_t>(v);
  }
  return labels;
}

int run_fit_regression(const CommonFlags& f, int max_nonzeros, double lambda2) {
  csv::Table table = csv::read_csv_file(f.input);
  if (table.values.cols() < 2)
    throw InvalidInputError("fit-regression needs at least one feature column plus the response");
  regression::RegressionDataset data;
  data.X = table.values.leftCols(table.values.cols() - 1);
  data.y = table.values.col(table.values.cols() - 1);

  regression::SparseRegressionOptions opts;
  opts.engine = engine_config(f);
  opts.budget.k = max_nonzeros;
  opts.budget.lambda2 = lambda2;
  auto result = regression::backbone_sparse_regression(data, opts);
  if (f.verbose) print_trace(result.engine);

  json j;
  j["schema_version"] = 1;
  j["model_type"] = "sparse_regression";
  j["coefficients"] = std::vector<double>(result.model.coefficients.data(),
                                          result.model.coefficients.data() +
                                              result.model.coefficients.size());
  j["support"] = result.model.support;
  j["intercept"] = result.model.intercept;
  j["objective_value"] = result.model.objective_value;
  j["optimality_gap"] = result.model.optimality_gap;
  j["backbone_size"] = result.engine.backbone.size();
  write_json_file(f.output, j);

  double r2 = regression::r_squared(data.y, regression::predict_regression(result.model, data.X));
  std::printf("r2=%.17g time_sec=%.6g backbone_size=%zu\n", r2,
              result.engine.trace.empty() ? 0.0 : result.engine.trace.back().elapsed_sec,
              result.engine.backbone.size());
  return kExitOk;
}

int run_fit_tree(const CommonFlags& f, int depth, int bins) {
  csv::Table table = csv::read_csv_file(f.input);
  if (table.values.cols() < 2)
    throw InvalidInputError("fit-tree needs at least one feature column plus the label");
  Eigen::MatrixXd raw = table.values.leftCols(table.values.cols() - 1);
  std::vector<std::uint8_t> labels = binary_labels(table.values.rightCols(1));

  auto data = trees::binarize(raw, labels, bins);
  trees::DecisionTreeOptions opts;
  opts.engine = engine_config(f);
  opts.depth = depth;
  auto result = trees::backbone_decision_tree(data, opts);
  if (f.verbose) print_trace(result.engine);

  json j;
  j["schema_version"] = 1;
  j["model_type"] = "decision_tree";
  j["depth"] = result.model.depth;
  j["split_feature"] = result.model.split_feature;
  j["leaf_positive_fraction"] = result.model.leaf_positive_fraction;
  j["misclassification_count"] = result.model.misclassification_count;
  j["binarization_map"] = json::array();
  for (const trees::BinarizationCut& cut : data.binarization_map)
    j["binarization_map"].push_back(
        {{"source_feature", cut.source_feature}, {"threshold", cut.threshold}});
  j["backbone_size"] = result.engine.backbone.size();
  write_json_file(f.output, j);

  std::vector<double> scores(data.n);
  for (int i = 0; i < data.n; ++i) scores[i] = result.model.score(data, i);
  double metric = trees::auc(data.labels, scores);
  std::printf("auc=%.17g time_sec=%.6g backbone_size=%zu\n", metric,
              result.engine.trace.empty() ? 0.0 : result.engine.trace.back().elapsed_sec,
              result.engine.backbone.size());
  return kExitOk;
}

int run_fit_cluster(const CommonFlags& f, int clusters, int min_cluster_size, double gap) {
  csv::Table table = csv::read_csv_file(f.input);
  clustering::PointSet points{table.values};

  clustering::ClusteringOptions opts;
  opts.engine = engine_config(f);
  opts.k = clusters;
  opts.min_cluster_size = min_cluster_size;
  opts.gap_tolerance = gap;
  if (f.time_budget > 0) opts.exact_time_budget_sec = f.time_budget;
  auto result = clustering::backbone_clustering(points, opts);
  if (f.verbose) print_trace(result.engine);

  json j;
  j["schema_version"] = 1;
  j["model_type"] = "clustering";
  j["assignment"] = result.model.assignment;
  j["k"] = result.model.k;
  j["b"] = min_cluster_size;
  j["objective_value"] = result.model.objective_value;
  j["optimality_gap"] = result.model.optimality_gap;
  j["backbone_size"] = result.engine.backbone.size();
  write_json_file(f.output, j);

  double sil = clustering::silhouette_score(points.X, result.model.assignment);
  std::printf("silhouette=%.17g time_sec=%.6g backbone_size=%zu\n", sil,
              result.engine.trace.empty() ? 0.0 : result.engine.trace.back().elapsed_sec,
              result.engine.backbone.size());
  // an incumbent outside the requested gap means the solve ran out of budget
  if (result.model.optimality_gap > gap + 1e-9) return kExitBudget;
  return kExitOk;
}

bench::ExperimentSpec parse_experiment(const json& j) {
  bench::ExperimentSpec spec;
  std::string problem = j.value("problem", "sparse_regression");
  if (problem == "sparse_regression")
    spec.problem = bench::Problem::SparseRegression;
  else if (problem == "decision_tree")
    spec.problem = bench::Problem::DecisionTree;
  else if (problem == "clustering")
    spec.problem = bench::Problem::Clustering;
  else
    throw InvalidInputError("benchmark spec: unknown problem " + problem);
  spec.n = j.value("n", spec.n);
  spec.p = j.value("p", spec.p);
  spec.k = j.value("k", spec.k);
  spec.noise = j.value("noise", spec.noise);
  spec.lambda2 = j.value("lambda2", spec.lambda2);
  spec.depth = j.value("depth", spec.depth);
  spec.bins_per_feature = j.value("bins_per_feature", spec.bins_per_feature);
  spec.target_k = j.value("target_k", spec.target_k);
  spec.min_cluster_size = j.value("min_cluster_size", spec.min_cluster_size);
  spec.gap_tolerance = j.value("gap_tolerance", spec.gap_tolerance);
  spec.repetitions = j.value("repetitions", spec.repetitions);
  spec.seed = j.value("seed", spec.seed);
  if (!j.contains("methods")) throw InvalidInputError("benchmark spec: missing methods");
  for (const json& jm : j.at("methods")) {
    bench::MethodSpec m;
    m.name = jm.at("name").get<std::string>();
    std::string kind = jm.at("kind").get<std::string>();
    if (kind == "heuristic_baseline")
      m.kind = bench::MethodKind::HeuristicBaseline;
    else if (kind == "exact_baseline")
      m.kind = bench::MethodKind::ExactBaseline;
    else if (kind == "backbone")
      m.kind = bench::MethodKind::Backbone;
    else
      throw InvalidInputError("benchmark spec: unknown method kind " + kind);
    m.time_budget_sec = jm.value("time_budget_sec", m.time_budget_sec);
    if (jm.contains("config")) {
      const json& jc = jm.at("config");
      m.config.num_subproblems = jc.value("num_subproblems", m.config.num_subproblems);
      m.config.screening_fraction = jc.value("screening_fraction", m.config.screening_fraction);
      m.config.subproblem_fraction = jc.value("subproblem_fraction", m.config.subproblem_fraction);
      m.config.max_backbone_size = jc.value("max_backbone_size", m.config.max_backbone_size);
      m.config.max_iterations = jc.value("max_iterations", m.config.max_iterations);
    }
    spec.methods.push_back(std::move(m));
  }
  return spec;
}

int run_benchmark_cmd(const std::string& input, const std::string& output) {
  std::ifstream in(input);
  if (!in) throw InvalidInputError("cannot open spec file " + input);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("benchmark spec: ") + e.what());
  }
  bench::ExperimentReport report = bench::run_benchmark(parse_experiment(j));

  std::ofstream csv_out(output + ".csv");
  if (!csv_out) throw InvalidInputError("cannot open output file " + output + ".csv");
  bench::write_report_csv(report, csv_out);
  std::ofstream json_out(output + ".json");
  if (!json_out) throw InvalidInputError("cannot open output file " + output + ".json");
  bench::write_report_json(report, json_out);

  for (const bench::AggregateRow& row : report.rows) {
    std::printf("%s accuracy=", row.method.c_str());
    if (row.accuracy_valid)
      std::printf("%.6g", row.accuracy);
    else
      std::printf("n/a");
    std::printf(" time_sec=%.6g\n", row.time_sec);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"backbone solvers for sparse regression, decision trees, and clustering"};
  app.require_subcommand(1);

  CommonFlags reg_flags, tree_flags, cluster_flags;
  int max_nonzeros = 5;
  double lambda2 = 0.001;
  int depth = 2;
  int bins = 2;
  int clusters = 2;
  int min_cluster_size = 1;
  double gap = 0.01;
  std::string bench_input, bench_output = "report";

  CLI::App* reg = app.add_subcommand("fit-regression", "cardinality-constrained ridge regression");
  add_common(reg, reg_flags);
  reg->add_option("--max-nonzeros", max_nonzeros, "sparsity budget k");
  reg->add_option("--lambda2", lambda2, "ridge parameter");

  CLI::App* tree = app.add_subcommand("fit-tree", "depth-limited optimal classification tree");
  add_common(tree, tree_flags);
  tree->add_option("--depth", depth, "tree depth");
  tree->add_option("--bins", bins, "binary columns per raw feature");

  CLI::App* cluster = app.add_subcommand("fit-cluster", "minimum-cost clique-partition clustering");
  add_common(cluster, cluster_flags);
  cluster->add_option("--clusters", clusters, "number of clusters");
  cluster->add_option("--min-cluster-size", min_cluster_size, "minimum points per cluster");
  cluster->add_option("--gap", gap, "relative optimality gap tolerance");

  CLI::App* bench_cmd = app.add_subcommand("benchmark", "run a benchmark spec");
  bench_cmd->add_option("--input", bench_input, "JSON experiment spec")->required();
  bench_cmd->add_option("--output", bench_output, "report path prefix (.csv and .json appended)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (reg->parsed()) return run_fit_regression(reg_flags, max_nonzeros, lambda2);
    if (tree->parsed()) return run_fit_tree(tree_flags, depth, bins);
    if (cluster->parsed()) return run_fit_cluster(cluster_flags, clusters, min_cluster_size, gap);
    if (bench_cmd->parsed()) return run_benchmark_cmd(bench_input, bench_output);
  } catch (const InvalidInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const SolverScaleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitUsage;
}
