#include "backbone/bench.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "backbone/clustering.hpp"
#include "backbone/datagen.hpp"
#include "backbone/errors.hpp"
#include "backbone/rng.hpp"
#include "backbone/sparse_regression.hpp"
#include "backbone/trees.hpp"

namespace backbone::bench {

using json = nlohmann::ordered_json;

const char* to_string(Problem p) {
  switch (p) {
    case Problem::SparseRegression: return "sparse_regression";
    case Problem::DecisionTree: return "decision_tree";
    case Problem::Clustering: return "clustering";
  }
  return "?";
}

const char* to_string(MethodKind k) {
  switch (k) {
    case MethodKind::HeuristicBaseline: return "heuristic_baseline";
    case MethodKind::ExactBaseline: return "exact_baseline";
    case MethodKind::Backbone: return "backbone";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  if (repetitions < 1) throw InvalidInputError("benchmark: repetitions must be >= 1");
  if (methods.empty()) throw InvalidInputError("benchmark: no methods configured");
  for (const MethodSpec& m : methods) {
    if (!(m.time_budget_sec > 0)) throw InvalidInputError("benchmark: budgets must be > 0");
    if (m.kind == MethodKind::Backbone) m.config.validate();
  }
  if (n < 2 || p < 1 || k < 1) throw InvalidInputError("benchmark: invalid problem sizes");
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

IndexSet all_indices(int p) {
  IndexSet all(p);
  std::iota(all.begin(), all.end(), 0u);
  return all;
}

void run_regression_rep(const ExperimentSpec& spec, int rep, std::vector<BenchRecord>& raw) {
  auto train = datagen::gen_sparse_regression(spec.n, spec.p, spec.k, spec.noise,
                                              derive_seed(spec.seed, rep, 0));
  auto test = datagen::gen_sparse_regression(spec.n, spec.p, spec.k, spec.noise,
                                             derive_seed(spec.seed, rep, 1));
  regression::SparsityBudget budget;
  budget.k = spec.k;
  budget.lambda2 = spec.lambda2;

  for (const MethodSpec& m : spec.methods) {
    BenchRecord rec;
    rec.repetition = rep;
    rec.method = m.name;
    rec.kind = m.kind;
    Timer timer;
    try {
      regression::RegressionModel model;
      if (m.kind == MethodKind::HeuristicBaseline) {
        model = regression::fit_subproblem_heuristic(train.data, all_indices(spec.p), budget,
                                                     derive_seed(spec.seed, rep, 2));
      } else if (m.kind == MethodKind::ExactBaseline) {
        model = regression::fit_exact_regression(train.data, all_indices(spec.p), budget, spec.p);
      } else {
        regression::SparseRegressionOptions opts;
        opts.engine = m.config;
        opts.engine.master_seed = derive_seed(spec.seed, rep, 3);
        opts.budget = budget;
        auto result = regression::backbone_sparse_regression(train.data, opts);
        model = result.model;
        rec.backbone_size = static_cast<double>(result.engine.backbone.size());
        rec.has_backbone = true;
      }
      rec.accuracy = regression::r_squared(test.data.y,
                                           regression::predict_regression(model, test.data.X));
      rec.accuracy_valid = true;
    } catch (const std::exception& e) {
      rec.note = e.what();
    }
    rec.time_sec = timer.seconds();
    rec.timed_out = rec.time_sec > m.time_budget_sec;
    raw.push_back(std::move(rec));
  }
}

void run_tree_rep(const ExperimentSpec& spec, int rep, std::vector<BenchRecord>& raw) {
  // one draw, halved: the nuisance mixing weights are seed-specific, so a
  // held-out set must come from the same draw to share them
  auto full = datagen::gen_classification(2 * spec.n, spec.p, spec.k, spec.noise,
                                          derive_seed(spec.seed, rep, 0));
  Eigen::MatrixXd train_raw = full.raw.topRows(spec.n);
  Eigen::MatrixXd test_raw = full.raw.bottomRows(spec.n);
  std::vector<std::uint8_t> train_labels(full.labels.begin(), full.labels.begin() + spec.n);
  std::vector<std::uint8_t> test_labels(full.labels.begin() + spec.n, full.labels.end());
  auto bin_train = trees::binarize(train_raw, train_labels, spec.bins_per_feature);
  auto bin_test = trees::apply_cuts(test_raw, test_labels, bin_train.binarization_map);

  for (const MethodSpec& m : spec.methods) {
    BenchRecord rec;
    rec.repetition = rep;
    rec.method = m.name;
    rec.kind = m.kind;
    Timer timer;
    try {
      trees::TreeModel model;
      if (m.kind == MethodKind::HeuristicBaseline) {
        model = trees::fit_tree_greedy(bin_train, all_indices(bin_train.p), spec.depth);
      } else if (m.kind == MethodKind::ExactBaseline) {
        model = trees::fit_tree_exact(bin_train, all_indices(bin_train.p), spec.depth,
                                      bin_train.p, spec.depth);
      } else {
        trees::DecisionTreeOptions opts;
        opts.engine = m.config;
        opts.engine.master_seed = derive_seed(spec.seed, rep, 3);
        opts.depth = spec.depth;
        auto result = trees::backbone_decision_tree(bin_train, opts);
        model = result.model;
        rec.backbone_size = static_cast<double>(result.engine.backbone.size());
        rec.has_backbone = true;
      }
      std::vector<double> scores(bin_test.n);
      for (int i = 0; i < bin_test.n; ++i) scores[i] = model.score(bin_test, i);
      rec.accuracy = trees::auc(bin_test.labels, scores);
      rec.accuracy_valid = true;
    } catch (const std::exception& e) {
      rec.note = e.what();
    }
    rec.time_sec = timer.seconds();
    rec.timed_out = rec.time_sec > m.time_budget_sec;
    raw.push_back(std::move(rec));
  }
}

void run_clustering_rep(const ExperimentSpec& spec, int rep, std::vector<BenchRecord>& raw) {
  auto blobs = datagen::gen_cluster_blobs(spec.n, spec.p, spec.k, spec.target_k, spec.noise,
                                          derive_seed(spec.seed, rep, 0));
  const Eigen::MatrixXd& X = blobs.points.X;

  for (const MethodSpec& m : spec.methods) {
    BenchRecord rec;
    rec.repetition = rep;
    rec.method = m.name;
    rec.kind = m.kind;
    Timer timer;
    try {
      std::vector<int> assignment;
      if (m.kind == MethodKind::HeuristicBaseline) {
        assignment = clustering::kmeans_fit(X, spec.target_k, derive_seed(spec.seed, rep, 2))
                         .assignment;
      } else if (m.kind == MethodKind::ExactBaseline) {
        IndexSet all_pairs(num_pairs(static_cast<std::uint32_t>(spec.n)));
        std::iota(all_pairs.begin(), all_pairs.end(), 0u);
        auto warm = clustering::kmeans_fit(X, spec.target_k, derive_seed(spec.seed, rep, 2));
        assignment = clustering::fit_exact_clustering(X, all_pairs, spec.target_k,
                                                      spec.min_cluster_size, spec.gap_tolerance,
                                                      m.time_budget_sec, &warm.assignment)
                         .assignment;
      } else {
        clustering::ClusteringOptions opts;
        opts.engine = m.config;
        opts.engine.master_seed = derive_seed(spec.seed, rep, 3);
        opts.k = spec.target_k;
        opts.min_cluster_size = spec.min_cluster_size;
        opts.gap_tolerance = spec.gap_tolerance;
        opts.exact_time_budget_sec = m.time_budget_sec;
        auto result = clustering::backbone_clustering(blobs.points, opts);
        assignment = result.model.assignment;
        rec.backbone_size = static_cast<double>(result.engine.backbone.size());
        rec.has_backbone = true;
      }
      rec.accuracy = clustering::silhouette_score(X, assignment);
      rec.accuracy_valid = true;
    } catch (const std::exception& e) {
      rec.note = e.what();
    }
    rec.time_sec = timer.seconds();
    rec.timed_out = rec.time_sec > m.time_budget_sec;
    raw.push_back(std::move(rec));
  }
}

}  // namespace

ExperimentReport run_benchmark(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentReport report;
  report.spec = spec;
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    switch (spec.problem) {
      case Problem::SparseRegression: run_regression_rep(spec, rep, report.raw); break;
      case Problem::DecisionTree: run_tree_rep(spec, rep, report.raw); break;
      case Problem::Clustering: run_clustering_rep(spec, rep, report.raw); break;
    }
  }

  for (const MethodSpec& m : spec.methods) {
    AggregateRow row;
    row.method = m.name;
    row.kind = m.kind;
    row.config = m.config;
    int valid = 0, total = 0;
    for (const BenchRecord& rec : report.raw) {
      if (rec.method != m.name) continue;
      ++total;
      row.time_sec += rec.time_sec;
      row.backbone_size += rec.backbone_size;
      row.has_backbone = row.has_backbone || rec.has_backbone;
      if (rec.accuracy_valid) {
        row.accuracy += rec.accuracy;
        ++valid;
      }
    }
    if (total > 0) {
      row.time_sec /= total;
      row.backbone_size /= total;
    }
    row.accuracy_valid = valid == total && total > 0;
    if (valid > 0) row.accuracy /= valid;
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  out << "problem,method,M,alpha,beta,accuracy,time_sec,backbone_size\n";
  for (const AggregateRow& row : report.rows) {
    out << to_string(report.spec.problem) << ',' << row.method << ',';
    if (row.kind == MethodKind::Backbone)
      out << row.config.num_subproblems << ',' << num(row.config.screening_fraction) << ','
          << num(row.config.subproblem_fraction);
    else
      out << ",,";
    out << ',';
    if (row.accuracy_valid) out << num(row.accuracy);
    out << ',' << num(row.time_sec) << ',';
    if (row.has_backbone) out << num(row.backbone_size);
    out << '\n';
  }
}

void write_report_json(const ExperimentReport& report, std::ostream& out) {
  const ExperimentSpec& spec = report.spec;
  json j;
  j["schema_version"] = 1;
  j["spec"] = {{"problem", to_string(spec.problem)},
               {"n", spec.n},
               {"p", spec.p},
               {"k", spec.k},
               {"noise", spec.noise},
               {"lambda2", spec.lambda2},
               {"depth", spec.depth},
               {"bins_per_feature", spec.bins_per_feature},
               {"target_k", spec.target_k},
               {"min_cluster_size", spec.min_cluster_size},
               {"gap_tolerance", spec.gap_tolerance},
               {"repetitions", spec.repetitions},
               {"seed", spec.seed}};
  j["spec"]["methods"] = json::array();
  for (const MethodSpec& m : spec.methods) {
    json jm{{"name", m.name},
            {"kind", to_string(m.kind)},
            {"time_budget_sec", m.time_budget_sec}};
    if (m.kind == MethodKind::Backbone)
      jm["config"] = {{"num_subproblems", m.config.num_subproblems},
                      {"screening_fraction", m.config.screening_fraction},
                      {"subproblem_fraction", m.config.subproblem_fraction},
                      {"max_backbone_size", m.config.max_backbone_size},
                      {"max_iterations", m.config.max_iterations}};
    j["spec"]["methods"].push_back(std::move(jm));
  }
  j["raw"] = json::array();
  for (const BenchRecord& rec : report.raw) {
    json jr{{"repetition", rec.repetition},
            {"method", rec.method},
            {"kind", to_string(rec.kind)},
            {"accuracy", rec.accuracy_valid ? json(rec.accuracy) : json(nullptr)},
            {"time_sec", rec.time_sec},
            {"backbone_size", rec.has_backbone ? json(rec.backbone_size) : json(nullptr)},
            {"timed_out", rec.timed_out}};
    if (!rec.note.empty()) jr["note"] = rec.note;
    j["raw"].push_back(std::move(jr));
  }
  j["rows"] = json::array();
  for (const AggregateRow& row : report.rows) {
    json jr{{"method", row.method},
            {"kind", to_string(row.kind)},
            {"accuracy", row.accuracy_valid ? json(row.accuracy) : json(nullptr)},
            {"time_sec", row.time_sec},
            {"backbone_size", row.has_backbone ? json(row.backbone_size) : json(nullptr)}};
    if (row.kind == MethodKind::Backbone)
      jr["engine"] = {{"M", row.config.num_subproblems},
                      {"alpha", row.config.screening_fraction},
                      {"beta", row.config.subproblem_fraction}};
    j["rows"].push_back(std::move(jr));
  }
  out << j.dump(2) << '\n';
}

}  // namespace backbone::bench
