#include "backbone/clustering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>

#include "backbone/errors.hpp"
#include "backbone/rng.hpp"

namespace backbone::clustering {

void PointSet::validate() const {
  if (X.rows() < 2 || X.cols() < 1) throw InvalidInputError("clustering: need >= 2 points");
  if (!X.allFinite()) throw InvalidInputError("clustering: non-finite coordinates");
}

namespace {

double sq_dist(const Eigen::MatrixXd& X, int i, int j) {
  return (X.row(i) - X.row(j)).squaredNorm();
}

KMeansResult kmeans_once(const Eigen::MatrixXd& X, int k, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding
  Eigen::MatrixXd centers(k, X.cols());
  std::vector<double> d2(n);
  {
    std::uniform_int_distribution<int> first(0, n - 1);
    centers.row(0) = X.row(first(rng));
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::max();
        for (int cc = 0; cc < c; ++cc)
          best = std::min(best, (X.row(i) - centers.row(cc)).squaredNorm());
        d2[i] = best;
        total += best;
      }
      int pick = 0;
      if (total > 0) {
        double target = unit(rng) * total, acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc >= target) {
            pick = i;
            break;
          }
        }
      } else {
        std::uniform_int_distribution<int> any(0, n - 1);
        pick = any(rng);
      }
      centers.row(c) = X.row(pick);
    }
  }

  KMeansResult result;
  result.assignment.assign(n, 0);
  double prev_ss = std::numeric_limits<double>::max();
  for (int iter = 0; iter < 300; ++iter) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        double d = (X.row(i) - centers.row(c)).squaredNorm();
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      result.assignment[i] = arg;
      ss += best;
    }
    // repair empty clusters with the point farthest from its center
    std::vector<int> sizes(k, 0);
    for (int a : result.assignment) ++sizes[a];
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      int worst = -1;
      double worst_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (sizes[result.assignment[i]] <= 1) continue;
        double d = (X.row(i) - centers.row(result.assignment[i])).squaredNorm();
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      if (worst < 0) break;
      --sizes[result.assignment[worst]];
      result.assignment[worst] = c;
      sizes[c] = 1;
      centers.row(c) = X.row(worst);
    }

    centers.setZero();
    std::fill(sizes.begin(), sizes.end(), 0);
    for (int i = 0; i < n; ++i) {
      centers.row(result.assignment[i]) += X.row(i);
      ++sizes[result.assignment[i]];
    }
    for (int c = 0; c < k; ++c)
      if (sizes[c] > 0) centers.row(c) /= sizes[c];

    result.within_ss = ss;
    if (prev_ss - ss <= 1e-6 * std::max(1.0, prev_ss)) break;
    prev_ss = ss;
  }
  result.centers = centers;
  return result;
}

}  // namespace

KMeansResult kmeans_fit(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int restarts) {
  if (X.rows() < 1) throw InvalidInputError("kmeans_fit: empty point set");
  if (k < 1 || k > X.rows()) throw InvalidInputError("kmeans_fit: k must be in [1, n]");
  if (restarts < 1) throw InvalidInputError("kmeans_fit: restarts must be >= 1");

  KMeansResult best;
  best.within_ss = std::numeric_limits<double>::max();
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run = kmeans_once(X, k, derive_seed(seed, static_cast<std::uint64_t>(r), 0));
    if (run.within_ss < best.within_ss) best = std::move(run);
  }
  return best;
}

double pair_objective(const Eigen::MatrixXd& X, const std::vector<int>& assignment) {
  const int n = static_cast<int>(X.rows());
  if (assignment.size() != static_cast<std::size_t>(n))
    throw InvalidInputError("pair_objective: assignment size mismatch");
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (assignment[i] == assignment[j]) total += sq_dist(X, i, j);
  return total;
}

IndexSet extract_coclustered_pairs(const std::vector<int>& assignment,
                                   const IndexSet& global_rows, std::uint32_t total_n) {
  if (assignment.size() != global_rows.size())
    throw InvalidInputError("extract_coclustered_pairs: size mismatch");
  IndexSet out;
  for (std::size_t a = 0; a < assignment.size(); ++a)
    for (std::size_t b = a + 1; b < assignment.size(); ++b)
      if (assignment[a] == assignment[b])
        out.push_back(pair_to_id(global_rows[a], global_rows[b], total_n));
  sort_unique(out);
  return out;
}

CliqueProgram build_reduced_clique_program(const Eigen::MatrixXd& X, const IndexSet& backbone,
                                           int k, int min_cluster_size) {
  const auto n = static_cast<std::uint32_t>(X.rows());
  if (k < 1) throw InvalidInputError("clique program: k must be >= 1");
  if (min_cluster_size < 1) throw InvalidInputError("clique program: min cluster size must be >= 1");
  if (static_cast<std::uint64_t>(k) * min_cluster_size > n)
    throw InfeasibleError("clique program: k * min_cluster_size exceeds the number of points");
  for (IndicatorId id : backbone)
    if (id >= num_pairs(n)) throw InvalidInputError("clique program: pair id out of range");

  const std::size_t zeta_count = backbone.size() * static_cast<std::size_t>(k);
  if (static_cast<std::size_t>(n) * k + zeta_count > 50000)
    throw SolverScaleError("clique program: " +
                           std::to_string(static_cast<std::size_t>(n) * k + zeta_count) +
                           " variables exceed the dense-solver budget");

  CliqueProgram cp;
  cp.n = static_cast<int>(n);
  cp.k = k;
  cp.z_index.assign(static_cast<std::size_t>(n) * k, -1);
  mio::BinaryProgram& bp = cp.program;

  for (std::uint32_t i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t)
      cp.z_index[i * k + t] =
          bp.add_binary("z_" + std::to_string(i) + "_" + std::to_string(t), 0.0);
  auto z = [&](std::uint32_t i, int t) { return cp.z_index[i * k + t]; };

  // symmetry breaking: point 0 opens cluster 0; cluster t cannot be used
  // before some earlier point opened cluster t-1
  bp.base.lower[z(0, 0)] = 1.0;
  for (std::uint32_t i = 0; i < n; ++i)
    for (int t = static_cast<int>(i) + 1; t < k; ++t) bp.base.upper[z(i, t)] = 0.0;
  for (std::uint32_t i = 1; i < n; ++i)
    for (int t = 1; t <= std::min<int>(k - 1, static_cast<int>(i)); ++t) {
      std::vector<std::pair<int, double>> terms{{z(i, t), 1.0}};
      for (std::uint32_t ip = 0; ip < i; ++ip) terms.emplace_back(z(ip, t - 1), -1.0);
      bp.base.add_constraint(std::move(terms), mio::Relation::LessEqual, 0.0);
    }

  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<std::pair<int, double>> terms;
    for (int t = 0; t < k; ++t) terms.emplace_back(z(i, t), 1.0);
    bp.base.add_constraint(std::move(terms), mio::Relation::Equal, 1.0);
  }
  for (int t = 0; t < k; ++t) {
    std::vector<std::pair<int, double>> terms;
    for (std::uint32_t i = 0; i < n; ++i) terms.emplace_back(z(i, t), 1.0);
    bp.base.add_constraint(std::move(terms), mio::Relation::GreaterEqual,
                           static_cast<double>(min_cluster_size));
  }

  // zeta_ijt linearizes z_it * z_jt for backbone pairs; integrality is implied
  std::vector<std::vector<int>> zeta_of(k);
  for (IndicatorId id : backbone) {
    auto [i, j] = id_to_pair(id, n);
    double cost = sq_dist(X, static_cast<int>(i), static_cast<int>(j));
    for (int t = 0; t < k; ++t) {
      int zeta = bp.add_continuous(
          "zeta_" + std::to_string(i) + "_" + std::to_string(j) + "_" + std::to_string(t), cost,
          0.0, 1.0);
      bp.base.add_constraint({{zeta, 1.0}, {z(i, t), -1.0}}, mio::Relation::LessEqual, 0.0, true);
      bp.base.add_constraint({{zeta, 1.0}, {z(j, t), -1.0}}, mio::Relation::LessEqual, 0.0, true);
      bp.base.add_constraint({{zeta, 1.0}, {z(i, t), -1.0}, {z(j, t), -1.0}},
                             mio::Relation::GreaterEqual, -1.0, true);
      zeta_of[t].push_back(zeta);
    }
  }
  // A cluster of size s that is a backbone clique has C(s,2) pairs, and
  // C(s,2) >= a*s - a(a+1)/2 for every integer a (secant through s = a, a+1).
  // One row per (cluster, a): a*sum_i z_it - sum_ij zeta_ijt <= a(a+1)/2.
  // a = 1 is the basic "used cluster is connected" row and stays eager; the
  // rest are lazy and only pulled in when binding. Secants far above the mean
  // cluster size are never binding, so the family is capped at 2n/k + 4.
  const int a_cap = std::min(cp.n, 2 * ((cp.n + k - 1) / k) + 4);
  for (int t = 0; t < k; ++t) {
    for (int a = 1; a <= a_cap; ++a) {
      std::vector<std::pair<int, double>> terms;
      terms.reserve(n + zeta_of[t].size());
      for (std::uint32_t i = 0; i < n; ++i) terms.emplace_back(z(i, t), static_cast<double>(a));
      for (int zeta : zeta_of[t]) terms.emplace_back(zeta, -1.0);
      bp.base.add_constraint(std::move(terms), mio::Relation::LessEqual,
                             static_cast<double>(a) * (a + 1) / 2.0, a > 1);
    }
  }

  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (contains(backbone, pair_to_id(i, j, n))) continue;
      for (int t = 0; t < k; ++t)
        bp.base.add_constraint({{z(i, t), 1.0}, {z(j, t), 1.0}}, mio::Relation::LessEqual, 1.0,
                               true);
    }
  return cp;
}

namespace {

// Relabel clusters by first occurrence so the warm start satisfies the
// symmetry-breaking rows.
std::vector<int> canonical_labels(const std::vector<int>& assignment, int k) {
  std::vector<int> remap(k, -1);
  int next = 0;
  std::vector<int> out(assignment.size());
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    int c = assignment[i];
    if (c < 0 || c >= k) throw InvalidInputError("warm start: label out of range");
    if (remap[c] < 0) remap[c] = next++;
    out[i] = remap[c];
  }
  return out;
}

}  // namespace

namespace {

constexpr double kInfObj = std::numeric_limits<double>::infinity();
constexpr double kNegInfObj = -std::numeric_limits<double>::infinity();

struct SubSolve {
  bool feasible = false;
  std::vector<int> assignment;  // local labels in [0, c)
  double objective = kInfObj;
  double lower_bound = kInfObj;
};

// Solve one backbone-graph component restricted to exactly `c` clusters.
SubSolve solve_component(const Eigen::MatrixXd& X, const std::vector<int>& rows,
                         const IndexSet& backbone, std::uint32_t n, int c, int min_cluster_size,
                         double gap_tolerance, double time_budget_sec,
                         const std::vector<int>* warm_local) {
  SubSolve out;
  const int nc = static_cast<int>(rows.size());
  if (static_cast<std::int64_t>(c) * min_cluster_size > nc) return out;  // infeasible
  if (nc == 1) {
    out.feasible = true;
    out.assignment = {0};
    out.objective = 0.0;
    out.lower_bound = 0.0;
    return out;
  }

  Eigen::MatrixXd sub(nc, X.cols());
  std::vector<int> local_of(static_cast<std::size_t>(X.rows()), -1);
  for (int r = 0; r < nc; ++r) {
    sub.row(r) = X.row(rows[r]);
    local_of[rows[r]] = r;
  }
  IndexSet local_pairs;
  for (IndicatorId id : backbone) {
    auto [i, j] = id_to_pair(id, n);
    int li = local_of[i], lj = local_of[j];
    if (li >= 0 && lj >= 0)
      local_pairs.push_back(pair_to_id(static_cast<std::uint32_t>(std::min(li, lj)),
                                       static_cast<std::uint32_t>(std::max(li, lj)),
                                       static_cast<std::uint32_t>(nc)));
  }
  sort_unique(local_pairs);

  CliqueProgram cp = build_reduced_clique_program(sub, local_pairs, c, min_cluster_size);
  std::vector<double> warm_values;
  const std::vector<double>* warm_ptr = nullptr;
  if (warm_local) {
    std::vector<int> labels = canonical_labels(*warm_local, c);
    warm_values.assign(cp.program.base.num_vars(), 0.0);
    for (int i = 0; i < nc; ++i) warm_values[cp.z_index[static_cast<std::size_t>(i) * c + labels[i]]] = 1.0;
    int var = nc * c;
    for (IndicatorId id : local_pairs) {
      auto [i, j] = id_to_pair(id, static_cast<std::uint32_t>(nc));
      for (int t = 0; t < c; ++t, ++var)
        if (labels[i] == t && labels[j] == t) warm_values[var] = 1.0;
    }
    warm_ptr = &warm_values;  // solve_bip drops it unless it verifies feasible
  }

  mio::MioSolution sol = mio::solve_bip(cp.program, gap_tolerance, time_budget_sec, warm_ptr);
  if (sol.status == mio::SolveStatus::Infeasible) return out;
  if (sol.values.empty()) {
    // timed out with no incumbent: unusable for the incumbent, no bound info
    out.lower_bound = kNegInfObj;
    return out;
  }
  out.feasible = true;
  out.assignment.assign(nc, 0);
  for (int i = 0; i < nc; ++i) {
    int arg = 0;
    double best = -1.0;
    for (int t = 0; t < c; ++t) {
      double v = sol.values[cp.z_index[static_cast<std::size_t>(i) * c + t]];
      if (v > best) {
        best = v;
        arg = t;
      }
    }
    out.assignment[i] = arg;
  }
  out.objective = sol.objective;
  out.lower_bound = sol.objective - sol.relative_gap * std::max(std::abs(sol.objective), 1e-9);
  return out;
}

}  // namespace

ClusterAssignment fit_exact_clustering(const Eigen::MatrixXd& X, const IndexSet& backbone, int k,
                                       int min_cluster_size, double gap_tolerance,
                                       double time_budget_sec,
                                       const std::vector<int>* warm_start) {
  const auto n = static_cast<std::uint32_t>(X.rows());
  if (k < 1) throw InvalidInputError("fit_exact_clustering: k must be >= 1");
  if (min_cluster_size < 1)
    throw InvalidInputError("fit_exact_clustering: min cluster size must be >= 1");
  if (static_cast<std::int64_t>(k) * min_cluster_size > static_cast<std::int64_t>(n))
    throw InfeasibleError("fit_exact_clustering: k * min_cluster_size exceeds the number of points");
  for (IndicatorId id : backbone)
    if (id >= num_pairs(n)) throw InvalidInputError("fit_exact_clustering: pair id out of range");
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(std::min(time_budget_sec, 1e18));
  auto remaining = [&] {
    return std::chrono::duration<double>(deadline - std::chrono::steady_clock::now()).count();
  };

  // Clusters cannot span components of the backbone graph (every cross pair
  // is forbidden), so the program decomposes: solve each component for every
  // admissible cluster count, then pick the count allocation by DP.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (IndicatorId id : backbone) {
    auto [i, j] = id_to_pair(id, n);
    parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
  }
  std::vector<std::vector<int>> comps;
  {
    std::vector<int> comp_of(n, -1);
    for (std::uint32_t i = 0; i < n; ++i) {
      int root = find(static_cast<int>(i));
      if (comp_of[root] < 0) {
        comp_of[root] = static_cast<int>(comps.size());
        comps.emplace_back();
      }
      comps[comp_of[root]].push_back(static_cast<int>(i));
    }
  }
  const int num_comps = static_cast<int>(comps.size());
  if (num_comps > k)
    throw InfeasibleError("fit_exact_clustering: no assignment uses only backbone pairs");

  // Per-component warm starts from the supplied assignment, keyed by the
  // cluster count it uses on that component.
  std::vector<std::vector<int>> warm_local(num_comps);
  std::vector<int> warm_count(num_comps, -1);
  if (warm_start && warm_start->size() == n) {
    for (int ci = 0; ci < num_comps; ++ci) {
      std::vector<int> local;
      local.reserve(comps[ci].size());
      bool ok = true;
      for (int row : comps[ci]) {
        int lab = (*warm_start)[row];
        if (lab < 0 || lab >= k) { ok = false; break; }
        local.push_back(lab);
      }
      if (!ok) continue;
      warm_local[ci] = canonical_labels(local, k);
      warm_count[ci] = 1 + *std::max_element(warm_local[ci].begin(), warm_local[ci].end());
    }
  }

  // dp_obj/dp_lb over (components prefix, clusters used); track the chosen
  // count per component for decoding.
  std::vector<std::vector<SubSolve>> solved(num_comps);
  for (int ci = 0; ci < num_comps; ++ci) {
    const int nc = static_cast<int>(comps[ci].size());
    const int c_hi = std::min(k - (num_comps - 1), nc / std::max(min_cluster_size, 1));
    solved[ci].resize(static_cast<std::size_t>(std::max(c_hi, 0)) + 1);
    for (int c = 1; c <= c_hi; ++c) {
      const std::vector<int>* warm =
          (warm_count[ci] == c) ? &warm_local[ci] : nullptr;
      solved[ci][c] = solve_component(X, comps[ci], backbone, n, c, min_cluster_size,
                                      gap_tolerance, std::max(remaining(), 0.0), warm);
    }
  }

  constexpr double kInf = kInfObj;
  std::vector<std::vector<double>> dp_obj(num_comps + 1, std::vector<double>(k + 1, kInf));
  std::vector<std::vector<double>> dp_lb(num_comps + 1, std::vector<double>(k + 1, kInf));
  std::vector<std::vector<int>> choice(num_comps + 1, std::vector<int>(k + 1, -1));
  dp_obj[0][0] = 0.0;
  dp_lb[0][0] = 0.0;
  for (int ci = 0; ci < num_comps; ++ci)
    for (int used = 0; used <= k; ++used) {
      for (int c = 1; c <= static_cast<int>(solved[ci].size()) - 1 && used + c <= k; ++c) {
        const SubSolve& s = solved[ci][c];
        if (dp_obj[ci][used] < kInf && s.feasible &&
            dp_obj[ci][used] + s.objective < dp_obj[ci + 1][used + c]) {
          dp_obj[ci + 1][used + c] = dp_obj[ci][used] + s.objective;
          choice[ci + 1][used + c] = c;
        }
        if (dp_lb[ci][used] < kInf && s.lower_bound < kInfObj) {
          double lb = dp_lb[ci][used] + s.lower_bound;
          if (lb < dp_lb[ci + 1][used + c]) dp_lb[ci + 1][used + c] = lb;
        }
      }
    }

  if (!(dp_obj[num_comps][k] < kInf)) {
    if (remaining() <= 0.0)
      throw SolverError("fit_exact_clustering: time limit reached without an incumbent");
    throw InfeasibleError("fit_exact_clustering: no assignment uses only backbone pairs");
  }

  ClusterAssignment out;
  out.k = k;
  out.assignment.assign(n, 0);
  int used = k;
  std::vector<int> counts(num_comps, 0);
  for (int ci = num_comps; ci >= 1; --ci) {
    counts[ci - 1] = choice[ci][used];
    used -= choice[ci][used];
  }
  int offset = 0;
  for (int ci = 0; ci < num_comps; ++ci) {
    const SubSolve& s = solved[ci][counts[ci]];
    for (std::size_t r = 0; r < comps[ci].size(); ++r)
      out.assignment[comps[ci][r]] = offset + s.assignment[r];
    offset += counts[ci];
  }
  out.objective_value = pair_objective(X, out.assignment);
  double lb = dp_lb[num_comps][k];
  out.optimality_gap =
      std::max((out.objective_value - lb) / std::max(std::abs(out.objective_value), 1e-9), 0.0);
  if (!std::isfinite(lb)) out.optimality_gap = std::numeric_limits<double>::infinity();
  return out;
}

double silhouette_score(const Eigen::MatrixXd& X, const std::vector<int>& assignment) {
  const int n = static_cast<int>(X.rows());
  if (assignment.size() != static_cast<std::size_t>(n))
    throw InvalidInputError("silhouette_score: assignment size mismatch");
  int k = 0;
  for (int a : assignment) {
    if (a < 0) throw InvalidInputError("silhouette_score: negative label");
    k = std::max(k, a + 1);
  }
  std::vector<int> sizes(k, 0);
  for (int a : assignment) ++sizes[a];
  int occupied = static_cast<int>(std::count_if(sizes.begin(), sizes.end(),
                                               [](int s) { return s > 0; }));
  if (occupied < 2 || n < 3)
    throw UndefinedMetricError("silhouette_score: needs >= 2 occupied clusters and >= 3 points");

  double total = 0.0;
  std::vector<double> mean_dist(k);
  for (int i = 0; i < n; ++i) {
    if (sizes[assignment[i]] == 1) continue;  // singleton scores 0
    std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
    for (int j = 0; j < n; ++j)
      if (j != i) mean_dist[assignment[j]] += std::sqrt(sq_dist(X, i, j));
    double a = mean_dist[assignment[i]] / (sizes[assignment[i]] - 1);
    double b = std::numeric_limits<double>::max();
    for (int c = 0; c < k; ++c)
      if (c != assignment[i] && sizes[c] > 0) b = std::min(b, mean_dist[c] / sizes[c]);
    double denom = std::max(a, b);
    if (denom > 0) total += (b - a) / denom;
  }
  return total / n;
}

ClusteringResult backbone_clustering(const PointSet& data, const ClusteringOptions& options) {
  data.validate();
  const auto n = static_cast<std::uint32_t>(data.n());
  if (options.k < 1 || options.k > data.n())
    throw InvalidInputError("backbone_clustering: k must be in [1, n]");

  struct SubFit {
    std::vector<int> assignment;
    IndexSet rows;
  };

  // Full-coverage subproblem clusterings are cached: their co-clustered pairs
  // are in the backbone by construction, so the best of them is a feasible
  // warm start for the reduced exact fit (an independent k-means run usually
  // is not). Selection is by (objective, canonical labels), so the result
  // does not depend on the worker schedule.
  std::vector<std::vector<int>> full_fits;
  std::mutex full_fits_mutex;

  SolverContract contract;
  contract.universe_size = n;
  contract.indicator_universe_size = num_pairs(n);
  contract.fit_subproblem = [&](const IndexSet& subset, std::uint64_t seed) -> std::any {
    Eigen::MatrixXd sub(subset.size(), data.d());
    for (std::size_t r = 0; r < subset.size(); ++r) sub.row(r) = data.X.row(subset[r]);
    int k_sub = std::min<int>(options.k, static_cast<int>(subset.size()));
    KMeansResult km = kmeans_fit(sub, k_sub, seed, options.kmeans_restarts);
    if (subset.size() == n && k_sub == options.k) {
      std::vector<int> full(n);
      for (std::size_t r = 0; r < subset.size(); ++r) full[subset[r]] = km.assignment[r];
      std::lock_guard<std::mutex> lock(full_fits_mutex);
      full_fits.push_back(std::move(full));
    }
    return SubFit{std::move(km.assignment), subset};
  };
  contract.extract_relevant = [&](const std::any& model) {
    const auto& fit = std::any_cast<const SubFit&>(model);
    return extract_coclustered_pairs(fit.assignment, fit.rows, n);
  };
  contract.fit = [&](const IndexSet& backbone) -> std::any {
    std::vector<int> warm;
    double warm_obj = kInfObj;
    for (const std::vector<int>& cand_raw : full_fits) {
      std::vector<int> cand = canonical_labels(cand_raw, options.k);
      double obj = pair_objective(data.X, cand);
      if (obj < warm_obj || (obj == warm_obj && cand < warm)) {
        warm_obj = obj;
        warm = std::move(cand);
      }
    }
    if (warm.empty()) {
      warm = kmeans_fit(data.X, options.k, derive_seed(options.engine.master_seed, 0x77a7, 0),
                        options.kmeans_restarts)
                 .assignment;
    }
    return fit_exact_clustering(data.X, backbone, options.k, options.min_cluster_size,
                                options.gap_tolerance, options.exact_time_budget_sec, &warm);
  };

  ClusteringResult result;
  result.engine = run_backbone(contract, options.engine);
  result.model = std::any_cast<ClusterAssignment>(result.engine.model);
  return result;
}

}  // namespace backbone::clustering
