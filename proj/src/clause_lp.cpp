#include "ruleopt/clause_lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ruleopt {

namespace {

void check_subproblem(const ClauseSubproblem& sub) {
  if (sub.a.rows == 0) throw std::invalid_argument("empty clause subproblem");
  if (sub.target.size() != sub.a.rows)
    throw std::invalid_argument("clause subproblem: target length mismatch");
  if (sub.theta < 0 || sub.pad_cost < 0)
    throw std::invalid_argument("clause subproblem: negative cost weight");
  for (auto t : sub.target)
    if (t != 0 && t != 1)
      throw std::invalid_argument("clause subproblem: target must be 0/1");
}

}  // namespace

LinearProgram build_clause_lp(const ClauseSubproblem& sub) {
  check_subproblem(sub);
  const std::size_t m = sub.a.rows;
  const std::size_t d1 = sub.a.cols;

  std::size_t num_pos = 0;
  for (auto t : sub.target) num_pos += t;

  LinearProgram lp;
  lp.objective.assign(d1 + num_pos, 1.0);  // xi costs
  for (std::size_t j = 0; j < d1; ++j) {
    double c = j == 0 ? sub.pad_cost : sub.theta;
    for (std::size_t i = 0; i < m; ++i)
      if (!sub.target[i]) c += sub.a.at(i, j);
    lp.objective[j] = c;
  }
  lp.lower.assign(d1 + num_pos, 0.0);
  lp.upper.assign(d1 + num_pos, 1.0);
  if (!sub.allow_pad) lp.upper[0] = 0.0;

  std::size_t xi = d1;
  for (std::size_t i = 0; i < m; ++i) {
    if (!sub.target[i]) continue;
    LpConstraint con;
    con.coeffs.assign(d1 + num_pos, 0.0);
    for (std::size_t j = 0; j < d1; ++j) con.coeffs[j] = sub.a.at(i, j);
    con.coeffs[xi++] = 1.0;
    con.relation = Relation::GreaterEqual;
    con.rhs = 1.0;
    lp.constraints.push_back(std::move(con));
  }
  return lp;
}

double exact_clause_objective(const ClauseSubproblem& sub,
                              std::span<const std::uint8_t> w) {
  if (w.size() != sub.a.cols)
    throw std::invalid_argument("clause objective: weight length mismatch");

  std::vector<std::size_t> sel;
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j]) sel.push_back(j);

  double pos_loss = 0.0, neg_loss = 0.0;
  for (std::size_t i = 0; i < sub.a.rows; ++i) {
    auto row = sub.a.row(i);
    if (sub.target[i]) {
      bool hit = false;
      for (std::size_t j : sel)
        if (row[j]) {
          hit = true;
          break;
        }
      if (!hit) pos_loss += 1.0;
    } else {
      int k = 0;
      for (std::size_t j : sel) k += row[j];
      neg_loss += static_cast<double>(k);
    }
  }

  int num_sel = 0;
  for (std::size_t j = 1; j < w.size(); ++j) num_sel += w[j];
  double penalty = sub.theta * static_cast<double>(num_sel) +
                   sub.pad_cost * static_cast<double>(w[0]);
  return pos_loss + neg_loss + penalty;
}

Clause round_lp(const std::vector<double>& fractional_w, const ClauseSubproblem& sub) {
  check_subproblem(sub);
  const std::size_t d1 = sub.a.cols;
  if (fractional_w.size() != d1)
    throw std::invalid_argument("round_lp: fractional vector length mismatch");

  std::vector<double> levels(fractional_w);
  levels.push_back(1.0);
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  Clause best;
  best.w.assign(d1, 0);  // all-zero candidate, ranked as the largest threshold
  best.objective_value = exact_clause_objective(sub, best.w);
  int best_sel = 0;

  std::vector<std::uint8_t> cand(d1);
  for (double t : levels) {
    int num_sel = 0;
    for (std::size_t j = 0; j < d1; ++j) {
      cand[j] = fractional_w[j] >= t ? 1 : 0;
      if (j > 0) num_sel += cand[j];
    }
    if (!sub.allow_pad) cand[0] = 0;
    double obj = exact_clause_objective(sub, cand);
    if (obj < best.objective_value ||
        (obj == best.objective_value && num_sel < best_sel)) {
      best.w = cand;
      best.objective_value = obj;
      best_sel = num_sel;
    }
  }
  return best;
}

namespace {

// Dual of the clause relaxation, in minimize form: one lambda in [0,1] per
// target-1 row, one overflow variable per usable weight column (paying for a
// weight at its upper bound), one <= row per usable weight column. Its basis
// has weight-column size instead of sample-row size, which keeps the solve
// cheap on wide subproblems, and the weights come back as the row duals.
struct DualClauseLp {
  LinearProgram lp;
  std::vector<std::size_t> active;  // lp row -> weight column
  std::size_t num_pos = 0;
};

DualClauseLp build_dual(const ClauseSubproblem& sub) {
  const std::size_t d1 = sub.a.cols;
  DualClauseLp dual;
  std::vector<std::size_t> pos_rows;
  for (std::size_t i = 0; i < sub.a.rows; ++i)
    if (sub.target[i]) pos_rows.push_back(i);
  dual.num_pos = pos_rows.size();
  for (std::size_t j = 0; j < d1; ++j)
    if (j != 0 || sub.allow_pad) dual.active.push_back(j);

  const std::size_t p = dual.num_pos;
  const std::size_t k = dual.active.size();
  dual.lp.objective.assign(p + k, 1.0);
  dual.lp.lower.assign(p + k, 0.0);
  dual.lp.upper.assign(p + k, 0.0);
  for (std::size_t q = 0; q < p; ++q) {
    dual.lp.objective[q] = -1.0;
    dual.lp.upper[q] = 1.0;
  }
  for (std::size_t t = 0; t < k; ++t) {
    std::size_t j = dual.active[t];
    double cost = j == 0 ? sub.pad_cost : sub.theta;
    double colsum = 0.0;
    for (std::size_t i = 0; i < sub.a.rows; ++i) {
      if (sub.target[i])
        colsum += sub.a.at(i, j);
      else
        cost += sub.a.at(i, j);
    }
    dual.lp.upper[p + t] = colsum;

    LpConstraint con;
    con.coeffs.assign(p + k, 0.0);
    for (std::size_t q = 0; q < p; ++q) con.coeffs[q] = sub.a.at(pos_rows[q], j);
    con.coeffs[p + t] = -1.0;
    con.relation = Relation::LessEqual;
    con.rhs = cost;
    dual.lp.constraints.push_back(std::move(con));
  }
  return dual;
}

}  // namespace

Clause learn_clause(const ClauseSubproblem& sub, const LpOptions& opts,
                    LpWarmStart* warm) {
  check_subproblem(sub);
  DualClauseLp dual = build_dual(sub);
  const std::size_t d1 = sub.a.cols;

  LpWarmStart basis;
  const LpWarmStart* start = nullptr;
  if (warm && warm->basic_columns.size() == dual.lp.constraints.size()) {
    basis = *warm;
    start = &basis;
  }
  LpSolution sol = solve_lp(dual.lp, opts, start);

  std::vector<double> frac(d1, 0.0);
  for (std::size_t t = 0; t < dual.active.size(); ++t)
    frac[dual.active[t]] = std::clamp(-sol.y[t], 0.0, 1.0);
  Clause clause = round_lp(frac, sub);
  clause.lp_value = -sol.value;
  clause.approximate = sol.status != LpStatus::Optimal;
  if (warm) *warm = sol.basis;
  return clause;
}

}  // namespace ruleopt
