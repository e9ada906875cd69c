#include "backbone/mio.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <queue>
#include <vector>

#include "backbone/errors.hpp"

namespace backbone::mio {

namespace {

constexpr double kFeasTol = 1e-7;
constexpr double kOptTol = 1e-9;
constexpr double kPivTol = 1e-9;

enum class VarStatus : std::uint8_t { AtLower, AtUpper, Basic };

// Full-tableau bounded-variable simplex over an active subset of rows.
// Lower bounds are shifted out, >= rows negated to <=, every row carries a
// slack ([0,inf) for <=, [0,0] for =), and rows infeasible at the all-lower
// starting point get a phase-1 artificial.
struct Simplex {
  int m = 0;
  int n_struct = 0;
  int n_total = 0;
  int n_art = 0;
  std::vector<double> tab;    // m x n_total, row-major: B^{-1} A
  std::vector<double> beta;   // basic values
  std::vector<double> dcost;  // reduced costs
  std::vector<double> lo, hi, cost;
  std::vector<int> basis;
  std::vector<VarStatus> status;
  std::vector<double> shift;
  double z = 0.0;

  double& at(int i, int j) { return tab[static_cast<std::size_t>(i) * n_total + j]; }

  void setup(const LinearProgram& lp, const std::vector<int>& active_rows) {
    m = static_cast<int>(active_rows.size());
    n_struct = lp.num_vars();
    shift.assign(n_struct, 0.0);
    for (int j = 0; j < n_struct; ++j) {
      if (!std::isfinite(lp.lower[j]))
        throw InvalidInputError("solve_lp: lower bounds must be finite");
      if (lp.lower[j] > lp.upper[j] + kFeasTol)
        throw InvalidInputError("solve_lp: variable with lower > upper");
      shift[j] = lp.lower[j];
    }

    std::vector<double> rhs(m, 0.0);
    std::vector<int> art_row;
    n_total = n_struct + m;
    lo.assign(n_total, 0.0);
    hi.assign(n_total, kInf);
    cost.assign(n_total, 0.0);
    for (int j = 0; j < n_struct; ++j) hi[j] = lp.upper[j] - shift[j];

    // First pass: normalized rhs and artificial bookkeeping.
    std::vector<double> row_scale(m, 1.0);
    for (int r = 0; r < m; ++r) {
      const Constraint& c = lp.constraints[active_rows[r]];
      double sgn = (c.rel == Relation::GreaterEqual) ? -1.0 : 1.0;
      double b = sgn * c.rhs;
      for (const auto& [v, a] : c.terms) b -= sgn * a * shift[v];
      int slack = n_struct + r;
      if (c.rel == Relation::Equal) hi[slack] = 0.0;
      bool need_art = (c.rel == Relation::Equal) ? std::abs(b) > kFeasTol : b < -kFeasTol;
      double s_row = (need_art && b < 0) ? -1.0 : 1.0;
      row_scale[r] = s_row * sgn;
      rhs[r] = s_row * b;
      if (need_art) art_row.push_back(r);
    }

    n_art = static_cast<int>(art_row.size());
    n_total += n_art;
    lo.resize(n_total, 0.0);
    hi.resize(n_total, kInf);
    cost.resize(n_total, 0.0);
    tab.assign(static_cast<std::size_t>(m) * n_total, 0.0);
    for (int r = 0; r < m; ++r) {
      const Constraint& c = lp.constraints[active_rows[r]];
      for (const auto& [v, a] : c.terms) at(r, v) += row_scale[r] * a;
      double sgn = (c.rel == Relation::GreaterEqual) ? -1.0 : 1.0;
      at(r, n_struct + r) = row_scale[r] / sgn;  // slack on the normalized row
    }
    for (int a = 0; a < n_art; ++a) at(art_row[a], n_struct + m + a) = 1.0;

    basis.assign(m, -1);
    status.assign(n_total, VarStatus::AtLower);
    beta.assign(m, 0.0);
    int art = 0;
    for (int r = 0; r < m; ++r) {
      bool has_art = art < n_art && art_row[art] == r;
      int bvar = has_art ? (n_struct + m + art) : (n_struct + r);
      if (has_art) ++art;
      basis[r] = bvar;
      status[bvar] = VarStatus::Basic;
      beta[r] = rhs[r];
    }
  }

  void install_costs(const LinearProgram& lp, bool phase1) {
    std::fill(cost.begin(), cost.end(), 0.0);
    if (phase1) {
      for (int a = 0; a < n_art; ++a) cost[n_struct + m + a] = 1.0;
    } else {
      for (int j = 0; j < n_struct; ++j) cost[j] = lp.objective[j];
    }
    dcost.assign(n_total, 0.0);
    z = 0.0;
    for (int r = 0; r < m; ++r) z += cost[basis[r]] * beta[r];
    std::vector<double> cb(m);
    bool any_cb = false;
    for (int r = 0; r < m; ++r) {
      cb[r] = cost[basis[r]];
      if (cb[r] != 0.0) any_cb = true;
    }
    for (int j = 0; j < n_total; ++j) {
      if (status[j] == VarStatus::Basic) continue;
      double d = cost[j];
      if (any_cb)
        for (int r = 0; r < m; ++r)
          if (cb[r] != 0.0) d -= cb[r] * at(r, j);
      dcost[j] = d;
      double v = (status[j] == VarStatus::AtUpper) ? hi[j] : lo[j];
      if (v != 0.0 && std::isfinite(v)) z += cost[j] * v;
    }
  }

  double bound_value(int j) const { return status[j] == VarStatus::AtUpper ? hi[j] : lo[j]; }

  void pivot(int r, int enter, double enter_value) {
    double inv = 1.0 / at(r, enter);
    double* rowr = &tab[static_cast<std::size_t>(r) * n_total];
    for (int j = 0; j < n_total; ++j) rowr[j] *= inv;
    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      double f = at(i, enter);
      if (f == 0.0) continue;
      double* rowi = &tab[static_cast<std::size_t>(i) * n_total];
      for (int j = 0; j < n_total; ++j) rowi[j] -= f * rowr[j];
      at(i, enter) = 0.0;
    }
    double df = dcost[enter];
    if (df != 0.0) {
      for (int j = 0; j < n_total; ++j) dcost[j] -= df * rowr[j];
      dcost[enter] = 0.0;
    }
    basis[r] = enter;
    status[enter] = VarStatus::Basic;
    beta[r] = enter_value;
  }

  enum class Result { Optimal, Unbounded };

  Result run_phase() {
    long degen = 0;
    const long bland_after = 10L * (m + n_total);
    const long max_iters = 2000L * (m + n_total) + 10000L;
    for (long iter = 0; iter < max_iters; ++iter) {
      bool bland = degen > bland_after;
      int enter = -1;
      double best = -kOptTol;
      for (int j = 0; j < n_total; ++j) {
        if (status[j] == VarStatus::Basic) continue;
        if (hi[j] - lo[j] < kPivTol) continue;  // fixed variable
        double viol = (status[j] == VarStatus::AtLower) ? dcost[j] : -dcost[j];
        if (viol < best) {
          best = viol;
          enter = j;
          if (bland) break;
        }
      }
      if (enter < 0) return Result::Optimal;

      double sigma = (status[enter] == VarStatus::AtLower) ? 1.0 : -1.0;
      double limit = hi[enter] - lo[enter];
      int leave_row = -1;
      bool leave_at_upper = false;
      for (int i = 0; i < m; ++i) {
        double w = sigma * at(i, enter);
        if (w > kPivTol) {
          double room = (beta[i] - lo[basis[i]]) / w;
          if (room < limit) { limit = room; leave_row = i; leave_at_upper = false; }
        } else if (w < -kPivTol && std::isfinite(hi[basis[i]])) {
          double room = (hi[basis[i]] - beta[i]) / (-w);
          if (room < limit) { limit = room; leave_row = i; leave_at_upper = true; }
        }
      }
      if (!std::isfinite(limit)) return Result::Unbounded;
      if (limit < 0) limit = 0;
      if (limit <= kPivTol) ++degen; else degen = 0;

      if (limit > 0) {
        for (int i = 0; i < m; ++i) beta[i] -= sigma * at(i, enter) * limit;
        z += sigma * dcost[enter] * limit;
      }
      if (leave_row < 0) {
        status[enter] =
            (status[enter] == VarStatus::AtLower) ? VarStatus::AtUpper : VarStatus::AtLower;
      } else {
        int leave = basis[leave_row];
        double enter_value = bound_value(enter) + sigma * limit;
        pivot(leave_row, enter, enter_value);
        status[leave] = leave_at_upper ? VarStatus::AtUpper : VarStatus::AtLower;
      }
    }
    throw SolverError("simplex: iteration limit exceeded");
  }

  void freeze_artificials() {
    for (int a = 0; a < n_art; ++a) {
      int v = n_struct + m + a;
      hi[v] = 0.0;
      if (status[v] != VarStatus::Basic) continue;
      int r = -1;
      for (int i = 0; i < m; ++i)
        if (basis[i] == v) { r = i; break; }
      int enter = -1;
      for (int j = 0; j < n_struct + m; ++j) {
        if (status[j] == VarStatus::Basic) continue;
        if (std::abs(at(r, j)) > 1e-7) { enter = j; break; }
      }
      if (enter >= 0) {
        VarStatus old = status[enter];
        dcost.assign(n_total, 0.0);  // costs reinstalled right after; keep pivot cheap
        pivot(r, enter, old == VarStatus::AtUpper ? hi[enter] : lo[enter]);
        status[v] = VarStatus::AtLower;
      }
      // else: redundant row, artificial stays basic at 0 with hi = 0
    }
  }

  void extract(const LinearProgram& lp, std::vector<double>& x) const {
    x.assign(n_struct, 0.0);
    for (int j = 0; j < n_struct; ++j)
      x[j] = (status[j] == VarStatus::AtUpper && std::isfinite(hi[j])) ? hi[j] : lo[j];
    for (int r = 0; r < m; ++r)
      if (basis[r] < n_struct) x[basis[r]] = beta[r];
    for (int j = 0; j < n_struct; ++j) {
      x[j] += shift[j];
      x[j] = std::min(std::max(x[j], lp.lower[j]), lp.upper[j]);
    }
  }
};

MioSolution solve_active(const LinearProgram& lp, const std::vector<int>& rows) {
  Simplex s;
  MioSolution sol;
  s.setup(lp, rows);
  if (s.n_art > 0) {
    s.install_costs(lp, /*phase1=*/true);
    if (s.run_phase() == Simplex::Result::Unbounded)
      throw SolverError("simplex: phase 1 unbounded");
    if (s.z > kFeasTol) {
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
    s.freeze_artificials();
  }
  s.install_costs(lp, /*phase1=*/false);
  if (s.run_phase() == Simplex::Result::Unbounded) {
    sol.status = SolveStatus::Unbounded;
    return sol;
  }
  s.extract(lp, sol.values);
  sol.objective = evaluate_objective(lp, sol.values);
  sol.status = SolveStatus::Optimal;
  return sol;
}

double row_violation(const Constraint& c, const std::vector<double>& x) {
  double lhs = 0.0;
  for (const auto& [v, a] : c.terms) lhs += a * x[v];
  switch (c.rel) {
    case Relation::LessEqual: return lhs - c.rhs;
    case Relation::GreaterEqual: return c.rhs - lhs;
    case Relation::Equal: return std::abs(lhs - c.rhs);
  }
  return 0.0;
}

}  // namespace

int LinearProgram::add_variable(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return num_vars() - 1;
}

void LinearProgram::add_constraint(std::vector<std::pair<int, double>> terms, Relation rel,
                                   double rhs, bool lazy) {
  constraints.push_back(Constraint{std::move(terms), rel, rhs, lazy});
}

int BinaryProgram::add_binary(const std::string& name, double cost) {
  int v = base.add_variable(cost, 0.0, 1.0);
  is_binary.push_back(true);
  names.push_back(name);
  return v;
}

int BinaryProgram::add_continuous(const std::string& name, double cost, double lo, double hi) {
  int v = base.add_variable(cost, lo, hi);
  is_binary.push_back(false);
  names.push_back(name);
  return v;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::GapLimit: return "gap_limit";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::TimeLimit: return "time_limit";
  }
  return "unknown";
}

double evaluate_objective(const LinearProgram& lp, const std::vector<double>& x) {
  double obj = 0.0;
  for (int j = 0; j < lp.num_vars(); ++j) obj += lp.objective[j] * x[j];
  return obj;
}

MioSolution solve_lp(const LinearProgram& lp) {
  const int total = static_cast<int>(lp.constraints.size());
  std::vector<int> active;
  std::vector<char> in_active(total, 0);
  // Lazy rows that went slack are dropped again to keep the dense tableau
  // small; a row reactivated this often oscillates and is pinned instead.
  std::vector<char> activations(total, 0);
  constexpr int kPinAfter = 4;
  active.reserve(total);
  for (int i = 0; i < total; ++i)
    if (!lp.constraints[i].lazy) { active.push_back(i); in_active[i] = 1; }

  for (int round = 0; round < 2000; ++round) {
    MioSolution sol = solve_active(lp, active);
    if (sol.status == SolveStatus::Infeasible) return sol;  // subset is a relaxation
    if (sol.status == SolveStatus::Unbounded) {
      if (static_cast<int>(active.size()) == total) return sol;
      for (int i = 0; i < total; ++i)
        if (!in_active[i]) { active.push_back(i); in_active[i] = 1; }
      std::sort(active.begin(), active.end());
      continue;
    }
    bool added = false;
    for (int i = 0; i < total; ++i) {
      if (in_active[i]) continue;
      if (row_violation(lp.constraints[i], sol.values) > kFeasTol) {
        active.push_back(i);
        in_active[i] = 1;
        if (activations[i] < kPinAfter) ++activations[i];
        added = true;
      }
    }
    if (!added) return sol;
    std::vector<int> kept;
    kept.reserve(active.size());
    for (int i : active) {
      const Constraint& c = lp.constraints[i];
      bool slack = c.lazy && activations[i] < kPinAfter &&
                   row_violation(c, sol.values) < -kFeasTol;
      if (slack)
        in_active[i] = 0;
      else
        kept.push_back(i);
    }
    active = std::move(kept);
    std::sort(active.begin(), active.end());
  }
  throw SolverError("solve_lp: lazy-row activation did not converge");
}

namespace {

bool integral_enough(const BinaryProgram& bp, const std::vector<double>& x, double tol) {
  for (int j = 0; j < bp.base.num_vars(); ++j)
    if (bp.is_binary[j] && std::abs(x[j] - std::round(x[j])) > tol) return false;
  return true;
}

struct Node {
  double bound;
  std::int64_t id;
  std::vector<std::pair<int, char>> fixes;  // (variable, 0/1)
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;                                // FIFO among ties; down child first
  }
};

}  // namespace

bool is_feasible(const BinaryProgram& bp, const std::vector<double>& x, double tol) {
  const LinearProgram& lp = bp.base;
  if (static_cast<int>(x.size()) != lp.num_vars()) return false;
  for (int j = 0; j < lp.num_vars(); ++j) {
    if (x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol) return false;
    if (bp.is_binary[j] && std::abs(x[j] - std::round(x[j])) > tol) return false;
  }
  for (const Constraint& c : lp.constraints)
    if (row_violation(c, x) > tol) return false;
  return true;
}

MioSolution solve_bip(const BinaryProgram& bp, double gap_tolerance, double time_budget_sec,
                      const std::vector<double>* warm_start) {
  if (gap_tolerance < 0) throw InvalidInputError("solve_bip: gap_tolerance must be >= 0");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  LinearProgram work = bp.base;
  MioSolution result;
  double incumbent = kInf;
  std::vector<double> inc_x;
  if (warm_start && is_feasible(bp, *warm_start)) {
    inc_x = *warm_start;
    incumbent = evaluate_objective(bp.base, inc_x);
  }

  auto rel_gap = [&](double bound) {
    if (!std::isfinite(incumbent)) return kInf;
    return std::max((incumbent - bound) / std::max(std::abs(incumbent), 1e-9), 0.0);
  };

  auto try_incumbent = [&](const std::vector<double>& x, double obj) {
    if (obj < incumbent - 1e-12) {
      incumbent = obj;
      inc_x = x;
      for (int j = 0; j < bp.base.num_vars(); ++j)
        if (bp.is_binary[j]) inc_x[j] = std::round(inc_x[j]);
    }
  };

  // Round the binaries, let an LP place the continuous variables, and try
  // single flips of the fractional binaries if the fixed LP is infeasible.
  auto rounding_heuristic = [&](const std::vector<double>& frac) {
    std::vector<int> fractional;
    for (int j = 0; j < bp.base.num_vars(); ++j)
      if (bp.is_binary[j] && std::abs(frac[j] - std::round(frac[j])) > 1e-6)
        fractional.push_back(j);
    auto attempt = [&](int flip_var) -> bool {
      LinearProgram sub = bp.base;
      for (int j = 0; j < bp.base.num_vars(); ++j) {
        if (!bp.is_binary[j]) continue;
        double v = std::round(frac[j]);
        if (j == flip_var) v = 1.0 - v;
        sub.lower[j] = sub.upper[j] = v;
      }
      MioSolution s = solve_lp(sub);
      if (s.status != SolveStatus::Optimal || !is_feasible(bp, s.values)) return false;
      try_incumbent(s.values, s.objective);
      return true;
    };
    if (attempt(-1)) return;
    int tries = 0;
    for (int j : fractional) {
      if (++tries > 20) break;
      if (attempt(j)) return;
    }
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push(Node{-kInf, 0, {}});
  std::int64_t next_id = 1;
  std::int64_t nodes = 0;
  double global_bound = -kInf;
  bool hit_time = false;
  bool stopped_on_gap = false;

  while (!open.empty()) {
    if (elapsed() > time_budget_sec) { hit_time = true; break; }
    Node node = open.top();
    open.pop();
    global_bound = node.bound;  // best-bound order: min over all open nodes
    if (std::isfinite(incumbent) && std::isfinite(node.bound) &&
        rel_gap(node.bound) <= gap_tolerance) {
      stopped_on_gap = true;
      break;
    }
    ++nodes;

    for (int j = 0; j < work.num_vars(); ++j) {
      work.lower[j] = bp.base.lower[j];
      work.upper[j] = bp.base.upper[j];
    }
    for (const auto& [v, val] : node.fixes) work.lower[v] = work.upper[v] = val;

    MioSolution relax = solve_lp(work);
    if (relax.status == SolveStatus::Infeasible) continue;
    if (relax.status == SolveStatus::Unbounded) {
      if (node.fixes.empty() && !std::isfinite(incumbent)) {
        result.status = SolveStatus::Unbounded;
        result.node_count = nodes;
        return result;
      }
      relax.objective = -kInf;
    }
    double bound = relax.objective;
    // this node had the least bound, so min(LP bound, next open bound) is a
    // certified global bound; stop as soon as it is within tolerance
    double certified = bound;
    if (!open.empty()) certified = std::min(certified, open.top().bound);
    if (std::isfinite(incumbent) && std::isfinite(certified) &&
        rel_gap(certified) <= gap_tolerance) {
      global_bound = certified;
      stopped_on_gap = true;
      break;
    }
    if (std::isfinite(incumbent) && bound >= incumbent - 1e-9) continue;

    if (relax.status == SolveStatus::Optimal && integral_enough(bp, relax.values, 1e-6)) {
      try_incumbent(relax.values, relax.objective);
      continue;
    }

    int branch_var = -1;
    double best_dist = kInf;
    int n_frac = 0;
    for (int j = 0; j < work.num_vars(); ++j) {
      if (!bp.is_binary[j]) continue;
      double v = relax.values[j];
      if (std::abs(v - std::round(v)) <= 1e-6) continue;
      ++n_frac;
      double dist = std::abs(v - 0.5);
      if (dist < best_dist - 1e-15) { best_dist = dist; branch_var = j; }
    }
    if (branch_var < 0) {
      if (is_feasible(bp, relax.values)) try_incumbent(relax.values, relax.objective);
      continue;
    }
    if (node.fixes.empty() || n_frac <= 8) rounding_heuristic(relax.values);

    Node down{bound, next_id++, node.fixes};
    down.fixes.emplace_back(branch_var, static_cast<char>(0));
    Node up{bound, next_id++, node.fixes};
    up.fixes.emplace_back(branch_var, static_cast<char>(1));
    open.push(std::move(down));
    open.push(std::move(up));
  }

  result.node_count = nodes;
  if (!std::isfinite(incumbent)) {
    result.status = hit_time ? SolveStatus::TimeLimit : SolveStatus::Infeasible;
    return result;
  }
  double final_bound = incumbent;
  if (hit_time || stopped_on_gap || !open.empty()) {
    final_bound = global_bound;
    if (!open.empty()) final_bound = std::min(final_bound, open.top().bound);
    if (!std::isfinite(final_bound)) final_bound = global_bound;
    if (!std::isfinite(final_bound)) final_bound = -kInf;
  }
  result.values = inc_x;
  result.objective = incumbent;
  result.relative_gap = rel_gap(std::min(final_bound, incumbent));
  if (hit_time)
    result.status = SolveStatus::TimeLimit;
  else if (result.relative_gap <= 1e-9)
    result.status = SolveStatus::Optimal;
  else
    result.status = SolveStatus::GapLimit;
  return result;
}

void write_lp_format(const BinaryProgram& bp, std::ostream& out) {
  const LinearProgram& lp = bp.base;
  out << "Minimize\n obj:";
  for (int j = 0; j < lp.num_vars(); ++j) {
    double c = lp.objective[j];
    if (c == 0.0) continue;
    out << (c >= 0 ? " + " : " - ") << std::abs(c) << " " << bp.names[j];
  }
  out << "\nSubject To\n";
  int idx = 0;
  for (const Constraint& c : lp.constraints) {
    out << " c" << idx++ << ":";
    for (const auto& [v, a] : c.terms)
      out << (a >= 0 ? " + " : " - ") << std::abs(a) << " " << bp.names[v];
    switch (c.rel) {
      case Relation::LessEqual: out << " <= "; break;
      case Relation::GreaterEqual: out << " >= "; break;
      case Relation::Equal: out << " = "; break;
    }
    out << c.rhs << "\n";
  }
  out << "Bounds\n";
  for (int j = 0; j < lp.num_vars(); ++j)
    out << " " << lp.lower[j] << " <= " << bp.names[j] << " <= " << lp.upper[j] << "\n";
  out << "Binary\n";
  for (int j = 0; j < lp.num_vars(); ++j)
    if (bp.is_binary[j]) out << " " << bp.names[j] << "\n";
  out << "End\n";
}

}  // namespace backbone::mio
