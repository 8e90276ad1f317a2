#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ruleopt/dataset.hpp"
#include "ruleopt/simplex.hpp"

namespace ruleopt {

// One-clause subproblem: learn an OR-clause w over the columns of a so that
// target-1 rows are covered (hinge loss) and target-0 rows are not (count
// loss), plus theta per selected non-pad feature and pad_cost for the pad.
struct ClauseSubproblem {
  BinaryMatrix a;  // m x (d+1), column 0 the all-ones pad
  std::vector<std::uint8_t> target;
  double theta = 0.0;
  double pad_cost = 0.0;
  bool allow_pad = true;  // false fixes w_0 = 0
};

struct Clause {
  std::vector<std::uint8_t> w;
  double objective_value = 0.0;
  double lp_value = 0.0;
  bool approximate = false;  // solver hit its iteration cap
};

// Variables: w_0..w_d then one xi per target-1 row (in row order).
// The negative-row loss is folded into the w costs, so the LP has one
// constraint per target-1 row only.
LinearProgram build_clause_lp(const ClauseSubproblem& sub);

double exact_clause_objective(const ClauseSubproblem& sub,
                              std::span<const std::uint8_t> w);

// Threshold sweep over the distinct fractional values plus {1} and the
// all-zero clause; exact objective per candidate; ties prefer fewer selected
// features, then the larger threshold. lp_value is left 0.
Clause round_lp(const std::vector<double>& fractional_w, const ClauseSubproblem& sub);

// Solves the relaxation through its dual (whose basis has weight-column size
// rather than row count) and rounds the recovered weights. warm, when given,
// supplies the starting dual basis and receives the final one. lp_value is
// the relaxation optimum by strong duality.
Clause learn_clause(const ClauseSubproblem& sub, const LpOptions& opts = {},
                    LpWarmStart* warm = nullptr);

}  // namespace ruleopt
