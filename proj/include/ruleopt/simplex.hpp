#pragma once

#include <cstdint>
#include <vector>

namespace ruleopt {

enum class Relation { LessEqual, GreaterEqual, Equal };

struct LpConstraint {
  std::vector<double> coeffs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

// minimize objective . x subject to the constraints and finite box bounds
struct LinearProgram {
  std::vector<double> objective;
  std::vector<LpConstraint> constraints;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_vars() const { return objective.size(); }
  void validate() const;
};

enum class LpStatus { Optimal, Infeasible, IterationLimit };

// Basis snapshot. Column indexing: 0..n-1 structural variables, n+i the
// logical variable of constraint row i. at_upper is indexed the same way
// and ignored for basic columns; an empty vector means all at lower bound.
struct LpWarmStart {
  std::vector<int> basic_columns;
  std::vector<std::uint8_t> at_upper;
};

struct LpSolution {
  LpStatus status = LpStatus::Optimal;
  std::vector<double> x;  // structural variables only
  std::vector<double> y;  // constraint duals for the final basis
  double value = 0.0;
  int iterations = 0;
  LpWarmStart basis;
};

struct LpOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  int max_iters = 0;  // 0 picks a cap scaled to problem size
};

// Bounded-variable primal simplex. Deterministic: Dantzig pricing with
// smallest-index ties, switching to Bland's rule after a degeneracy streak.
// A rejected or absent warm basis falls back to a cold start.
LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts = {},
                    const LpWarmStart* warm = nullptr);

}  // namespace ruleopt
