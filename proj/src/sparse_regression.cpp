#include "backbone/sparse_regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "backbone/errors.hpp"
#include "backbone/rng.hpp"

namespace backbone::regression {

namespace {

constexpr int kIhtMaxIters = 500;
constexpr double kIhtRelTol = 1e-7;
constexpr int kPowerIters = 50;
constexpr int kMaxSwapSweeps = 100;

// Centered response and centered, unit-norm columns; fits happen here and the
// coefficients are mapped back to the original scale at the end.
struct Standardized {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd col_mean;
  Eigen::VectorXd col_scale;  // 1.0 for zero-norm columns
  double y_mean = 0.0;
  double yty = 0.0;
};

Standardized standardize(const RegressionDataset& data) {
  Standardized s;
  const int n = data.n(), p = data.p();
  s.col_mean = data.X.colwise().mean();
  s.X = data.X.rowwise() - s.col_mean.transpose();
  s.col_scale.resize(p);
  for (int j = 0; j < p; ++j) {
    double norm = s.X.col(j).norm();
    s.col_scale[j] = norm > 1e-12 ? norm : 1.0;
    s.X.col(j) /= s.col_scale[j];
  }
  s.y_mean = data.y.mean();
  s.y = data.y.array() - s.y_mean;
  s.yty = s.y.squaredNorm();
  (void)n;
  return s;
}

// Ridge fit restricted to the columns `cols` of the standardized data.
// Returns the objective; coefficients (in `cols` order) land in `b_out`.
double ridge_on(const Standardized& s, const std::vector<int>& cols, double lambda2,
                Eigen::VectorXd& b_out) {
  const int q = static_cast<int>(cols.size());
  if (q == 0) {
    b_out.resize(0);
    return s.yty;
  }
  Eigen::MatrixXd Xs(s.X.rows(), q);
  for (int i = 0; i < q; ++i) Xs.col(i) = s.X.col(cols[i]);
  if (lambda2 > 0) {
    Eigen::MatrixXd G = Xs.transpose() * Xs;
    G.diagonal().array() += lambda2;
    Eigen::VectorXd c = Xs.transpose() * s.y;
    b_out = G.ldlt().solve(c);
    // (G + lambda I) b = c  =>  obj = y'y - b'c
    return s.yty - b_out.dot(c);
  }
  b_out = Xs.completeOrthogonalDecomposition().solve(s.y);
  return (s.y - Xs * b_out).squaredNorm();
}

RegressionModel assemble(const Standardized& s, int p, const std::vector<int>& cols,
                         const Eigen::VectorXd& b, double objective, double gap) {
  RegressionModel model;
  model.coefficients = Eigen::VectorXd::Zero(p);
  model.support.clear();
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    if (std::abs(b[i]) < 1e-12) continue;
    model.coefficients[cols[i]] = b[i] / s.col_scale[cols[i]];
    model.support.push_back(static_cast<IndicatorId>(cols[i]));
  }
  sort_unique(model.support);
  model.intercept = s.y_mean;
  for (IndicatorId j : model.support) model.intercept -= model.coefficients[j] * s.col_mean[j];
  model.objective_value = objective;
  model.optimality_gap = gap;
  return model;
}

}  // namespace

void RegressionDataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw InvalidInputError("regression: empty design matrix");
  if (y.size() != X.rows()) throw InvalidInputError("regression: y length != number of rows");
  if (!X.allFinite() || !y.allFinite())
    throw InvalidInputError("regression: non-finite entries in data");
}

UtilityVector correlation_utilities(const RegressionDataset& data) {
  data.validate();
  Eigen::VectorXd yc = data.y.array() - data.y.mean();
  double ynorm = yc.norm();
  if (ynorm < 1e-12) throw InvalidInputError("correlation_utilities: response is constant");
  UtilityVector u(data.p(), 0.0);
  Eigen::VectorXd mean = data.X.colwise().mean();
  for (int j = 0; j < data.p(); ++j) {
    Eigen::VectorXd xc = data.X.col(j).array() - mean[j];
    double xnorm = xc.norm();
    if (xnorm < 1e-12) continue;
    u[j] = std::abs(xc.dot(yc)) / (xnorm * ynorm);
  }
  return u;
}

RegressionModel fit_subproblem_heuristic(const RegressionDataset& data, const IndexSet& subset,
                                         const SparsityBudget& budget, std::uint64_t seed) {
  (void)seed;  // the method is deterministic; seed kept for contract symmetry
  data.validate();
  if (subset.empty()) throw InvalidInputError("fit_subproblem_heuristic: empty subset");
  const int km = std::min<int>(budget.subproblem_k(), static_cast<int>(subset.size()));
  if (km < 1) throw InvalidInputError("fit_subproblem_heuristic: budget must be >= 1");
  const double lambda2 = budget.lambda2;

  Standardized s = standardize(data);
  const int q = static_cast<int>(subset.size());
  Eigen::MatrixXd Xp(s.X.rows(), q);
  for (int i = 0; i < q; ++i) Xp.col(i) = s.X.col(subset[i]);
  Eigen::MatrixXd G = Xp.transpose() * Xp;
  Eigen::VectorXd c = Xp.transpose() * s.y;

  // step size 1/L, L from power iteration on the restricted Gram
  Eigen::VectorXd v = Eigen::VectorXd::Ones(q).normalized();
  double L = 1.0;
  for (int it = 0; it < kPowerIters; ++it) {
    Eigen::VectorXd w = G * v;
    double norm = w.norm();
    if (norm < 1e-12) break;
    L = norm;
    v = w / norm;
  }
  L += lambda2;
  if (L < 1e-12) L = 1.0;

  auto hard_threshold = [&](Eigen::VectorXd& b) {
    if (q <= km) return;
    std::vector<int> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int bb) { return std::abs(b[a]) > std::abs(b[bb]); });
    for (int i = km; i < q; ++i) b[order[i]] = 0.0;
  };

  Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
  double prev_obj = s.yty;
  for (int it = 0; it < kIhtMaxIters; ++it) {
    Eigen::VectorXd grad = G * b - c + lambda2 * b;
    b -= grad / L;
    hard_threshold(b);
    double obj = s.yty - 2.0 * b.dot(c) + b.dot(G * b) + lambda2 * b.squaredNorm();
    if (std::abs(prev_obj - obj) <= kIhtRelTol * std::max(1.0, std::abs(prev_obj))) break;
    prev_obj = obj;
  }

  // support from IHT, then exact ridge refit on it
  std::vector<int> support;
  for (int i = 0; i < q; ++i)
    if (b[i] != 0.0) support.push_back(i);
  if (static_cast<int>(support.size()) > km) support.resize(km);
  if (support.empty()) support.push_back(0);
  while (static_cast<int>(support.size()) < km) {
    // top-up from largest |correlation| not yet included
    int best = -1;
    double best_c = -1;
    for (int i = 0; i < q; ++i) {
      if (std::find(support.begin(), support.end(), i) != support.end()) continue;
      if (std::abs(c[i]) > best_c) { best_c = std::abs(c[i]); best = i; }
    }
    if (best < 0) break;
    support.push_back(best);
  }
  std::sort(support.begin(), support.end());

  auto support_objective = [&](const std::vector<int>& sup, Eigen::VectorXd& coef) {
    const int r = static_cast<int>(sup.size());
    Eigen::MatrixXd Gs(r, r);
    Eigen::VectorXd cs(r);
    for (int a = 0; a < r; ++a) {
      cs[a] = c[sup[a]];
      for (int bb = 0; bb < r; ++bb) Gs(a, bb) = G(sup[a], sup[bb]);
    }
    Gs.diagonal().array() += lambda2 + 1e-12;
    coef = Gs.ldlt().solve(cs);
    return s.yty - coef.dot(cs);
  };

  Eigen::VectorXd coef;
  double obj = support_objective(support, coef);

  // local swap refinement: replace one support member by one non-member while
  // it strictly decreases the objective
  for (int sweep = 0; sweep < kMaxSwapSweeps; ++sweep) {
    double best_obj = obj;
    int best_out = -1, best_in = -1;
    std::vector<char> in_support(q, 0);
    for (int i : support) in_support[i] = 1;
    for (std::size_t oi = 0; oi < support.size(); ++oi) {
      for (int j = 0; j < q; ++j) {
        if (in_support[j]) continue;
        std::vector<int> cand = support;
        cand[oi] = j;
        std::sort(cand.begin(), cand.end());
        Eigen::VectorXd tmp;
        double cand_obj = support_objective(cand, tmp);
        if (cand_obj < best_obj - 1e-12) {
          best_obj = cand_obj;
          best_out = static_cast<int>(oi);
          best_in = j;
        }
      }
    }
    if (best_out < 0) break;
    support[best_out] = best_in;
    std::sort(support.begin(), support.end());
    obj = support_objective(support, coef);
  }

  std::vector<int> global_cols;
  for (int i : support) global_cols.push_back(static_cast<int>(subset[i]));
  // recompute coefficients in global order (support is sorted, so order matches)
  RegressionModel model = assemble(s, data.p(), global_cols, coef, obj, 0.0);
  model.optimality_gap = 0.0;  // heuristic: no certificate; gap reported by exact fits
  return model;
}

IndexSet extract_relevant_regression(const RegressionModel& model) { return model.support; }

RegressionModel fit_exact_regression(const RegressionDataset& data, const IndexSet& backbone,
                                     const SparsityBudget& budget, int exact_cap) {
  data.validate();
  if (backbone.empty()) throw InvalidInputError("fit_exact_regression: empty backbone");
  if (static_cast<int>(backbone.size()) > exact_cap)
    throw SolverScaleError("fit_exact_regression: backbone size " +
                           std::to_string(backbone.size()) + " exceeds the exact-solver cap " +
                           std::to_string(exact_cap) + "; use a smaller backbone");
  const int k = budget.k;
  if (k < 1 || k > static_cast<int>(backbone.size()))
    throw InvalidInputError("fit_exact_regression: need 1 <= k <= |backbone|");
  const double lambda2 = budget.lambda2;

  Standardized s = standardize(data);
  const int q = static_cast<int>(backbone.size());

  auto local_ridge = [&](const std::vector<int>& locals, Eigen::VectorXd& b_out) {
    std::vector<int> cols;
    cols.reserve(locals.size());
    for (int i : locals) cols.push_back(static_cast<int>(backbone[i]));
    return ridge_on(s, cols, lambda2, b_out);
  };

  // incumbent from the heuristic
  SparsityBudget hb = budget;
  hb.k_m = k;
  RegressionModel incumbent = fit_subproblem_heuristic(data, backbone, hb, 0);
  double inc_obj = incumbent.objective_value;
  std::vector<int> inc_support;  // local indices
  for (IndicatorId g : incumbent.support) {
    auto it = std::lower_bound(backbone.begin(), backbone.end(), g);
    inc_support.push_back(static_cast<int>(it - backbone.begin()));
  }

  struct Node {
    double bound;
    std::int64_t id;
    std::vector<int> fixed_in;   // local indices
    std::vector<int> fixed_out;
  };
  struct Order {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      return a.id > b.id;
    }
  };
  std::priority_queue<Node, std::vector<Node>, Order> open;
  open.push(Node{0.0, 0, {}, {}});
  std::int64_t next_id = 1;

  auto accept = [&](double obj, const std::vector<int>& sup) {
    if (obj < inc_obj - 1e-12) {
      inc_obj = obj;
      inc_support = sup;
    }
  };

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (node.bound >= inc_obj - 1e-12) continue;

    std::vector<int> free_idx;
    {
      std::vector<char> used(q, 0);
      for (int i : node.fixed_in) used[i] = 1;
      for (int i : node.fixed_out) used[i] = 1;
      for (int i = 0; i < q; ++i)
        if (!used[i]) free_idx.push_back(i);
    }
    const int n_in = static_cast<int>(node.fixed_in.size());

    if (n_in == k) {
      Eigen::VectorXd b;
      double obj = local_ridge(node.fixed_in, b);
      accept(obj, node.fixed_in);
      continue;
    }
    std::vector<int> relaxed = node.fixed_in;
    relaxed.insert(relaxed.end(), free_idx.begin(), free_idx.end());
    std::sort(relaxed.begin(), relaxed.end());
    Eigen::VectorXd b;
    double bound = local_ridge(relaxed, b);
    if (bound >= inc_obj - 1e-12) continue;
    if (n_in + static_cast<int>(free_idx.size()) <= k) {
      accept(bound, relaxed);  // relaxation is feasible at this node
      continue;
    }

    // branch on the free index with the largest |ridge coefficient|
    int branch = -1;
    double best_mag = -1.0;
    for (std::size_t i = 0; i < relaxed.size(); ++i) {
      int local = relaxed[i];
      if (std::binary_search(node.fixed_in.begin(), node.fixed_in.end(), local)) continue;
      double mag = std::abs(b[static_cast<int>(i)]);
      if (mag > best_mag + 1e-15) { best_mag = mag; branch = local; }
    }
    if (branch < 0) branch = free_idx.front();

    Node in_child{bound, next_id++, node.fixed_in, node.fixed_out};
    in_child.fixed_in.push_back(branch);
    std::sort(in_child.fixed_in.begin(), in_child.fixed_in.end());
    Node out_child{bound, next_id++, node.fixed_in, node.fixed_out};
    out_child.fixed_out.push_back(branch);
    std::sort(out_child.fixed_out.begin(), out_child.fixed_out.end());
    open.push(std::move(in_child));
    open.push(std::move(out_child));
  }

  std::sort(inc_support.begin(), inc_support.end());
  Eigen::VectorXd b;
  double obj = local_ridge(inc_support, b);
  std::vector<int> cols;
  for (int i : inc_support) cols.push_back(static_cast<int>(backbone[i]));
  return assemble(s, data.p(), cols, b, obj, 0.0);
}

Eigen::VectorXd predict_regression(const RegressionModel& model, const Eigen::MatrixXd& X_new) {
  if (X_new.cols() != model.coefficients.size())
    throw InvalidInputError("predict_regression: column count mismatch");
  return (X_new * model.coefficients).array() + model.intercept;
}

double r_squared(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() < 2)
    throw InvalidInputError("r_squared: need equal lengths >= 2");
  double mean = y_true.mean();
  double ss_tot = (y_true.array() - mean).square().sum();
  if (ss_tot < 1e-12) throw UndefinedMetricError("r_squared: constant y_true");
  double ss_res = (y_true - y_pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

SparseRegressionResult backbone_sparse_regression(const RegressionDataset& data,
                                                  const SparseRegressionOptions& options) {
  data.validate();
  SolverContract contract;
  contract.universe_size = static_cast<std::size_t>(data.p());
  contract.calculate_utilities = [&] { return correlation_utilities(data); };
  contract.fit_subproblem = [&](const IndexSet& subset, std::uint64_t seed) -> std::any {
    return fit_subproblem_heuristic(data, subset, options.budget, seed);
  };
  contract.extract_relevant = [](const std::any& model) {
    return extract_relevant_regression(std::any_cast<const RegressionModel&>(model));
  };
  contract.fit = [&](const IndexSet& backbone) -> std::any {
    SparsityBudget final_budget = options.budget;
    final_budget.k = std::min<int>(final_budget.k, static_cast<int>(backbone.size()));
    return fit_exact_regression(data, backbone, final_budget, options.exact_cap);
  };

  SparseRegressionResult result;
  result.engine = run_backbone(contract, options.engine);
  result.model = std::any_cast<RegressionModel>(result.engine.model);
  return result;
}

}  // namespace backbone::regression
