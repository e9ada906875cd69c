#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace backbone::mio {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, GreaterEqual, Equal };

struct Constraint {
  std::vector<std::pair<int, double>> terms;  // sparse (variable, coefficient)
  Relation rel = Relation::LessEqual;
  double rhs = 0.0;
  // Lazy rows start outside the working LP and are activated only when the
  // current optimum violates them. Semantics are unchanged; the returned
  // solution satisfies every row.
  bool lazy = false;
};

// minimize c^T x subject to rows and variable bounds.
// Lower bounds must be finite; upper bounds may be +inf.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Constraint> constraints;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int add_variable(double cost, double lo, double hi);
  void add_constraint(std::vector<std::pair<int, double>> terms, Relation rel, double rhs,
                      bool lazy = false);
};

struct BinaryProgram {
  LinearProgram base;
  std::vector<bool> is_binary;  // per variable
  std::vector<std::string> names;

  int add_binary(const std::string& name, double cost);
  int add_continuous(const std::string& name, double cost, double lo, double hi);
};

enum class SolveStatus { Optimal, GapLimit, Infeasible, Unbounded, TimeLimit };

const char* to_string(SolveStatus s);

struct MioSolution {
  std::vector<double> values;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  double relative_gap = 0.0;
  std::int64_t node_count = 0;
};

// Two-phase dense simplex on bounded variables. Feasibility tolerance 1e-7,
// optimality tolerance 1e-9, Bland's rule after 10*(m+n) degenerate pivots.
MioSolution solve_lp(const LinearProgram& lp);

// Best-bound branch-and-bound over the binary variables. Branches on the
// binary with fractional value closest to 0.5 (ties by lowest index),
// down-branch first. An optional warm start supplies an initial incumbent;
// it is used only if it verifies as feasible.
MioSolution solve_bip(const BinaryProgram& bp, double gap_tolerance = 0.0,
                      double time_budget_sec = kInf,
                      const std::vector<double>* warm_start = nullptr);

// True if `x` satisfies all rows, bounds, and binary integrality to 1e-6.
bool is_feasible(const BinaryProgram& bp, const std::vector<double>& x, double tol = 1e-6);

double evaluate_objective(const LinearProgram& lp, const std::vector<double>& x);

// LP-format text export for cross-checking against external solvers.
void write_lp_format(const BinaryProgram& bp, std::ostream& out);

}  // namespace backbone::mio
