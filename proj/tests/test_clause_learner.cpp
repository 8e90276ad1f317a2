#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "ruleopt/clause_lp.hpp"
#include "support/oracles.hpp"

using namespace ruleopt;

namespace {

ClauseSubproblem make_sub(const std::vector<std::vector<std::uint8_t>>& rows,
                          const std::vector<std::uint8_t>& target, double theta,
                          double pad_cost = 0.0) {
  ClauseSubproblem sub;
  sub.a = BinaryMatrix(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) sub.a.at(i, j) = rows[i][j];
  sub.target = target;
  sub.theta = theta;
  sub.pad_cost = pad_cost;
  return sub;
}

}  // namespace

TEST_CASE("build_clause_lp folds negative-row losses into the weight costs") {
  // rows: pad, f1, f2; two target-1 rows, one target-0 row with f2 set
  auto sub = make_sub({{1, 1, 0}, {1, 0, 1}, {1, 0, 1}}, {1, 1, 0}, 0.25, 0.5);
  LinearProgram lp = build_clause_lp(sub);

  REQUIRE(lp.num_vars() == 5);  // 3 weights + 2 slacks
  CHECK(lp.objective[0] == 0.5 + 1.0);   // pad_cost + pad count on the negative
  CHECK(lp.objective[1] == 0.25 + 0.0);  // theta + negative hits
  CHECK(lp.objective[2] == 0.25 + 1.0);
  CHECK(lp.objective[3] == 1.0);
  CHECK(lp.objective[4] == 1.0);

  REQUIRE(lp.constraints.size() == 2);  // only target-1 rows constrain
  for (const auto& con : lp.constraints) {
    CHECK(con.relation == Relation::GreaterEqual);
    CHECK(con.rhs == 1.0);
  }
  CHECK(lp.constraints[0].coeffs == std::vector<double>{1, 1, 0, 1, 0});
  CHECK(lp.constraints[1].coeffs == std::vector<double>{1, 0, 1, 0, 1});
  for (std::size_t j = 0; j < lp.num_vars(); ++j) {
    CHECK(lp.lower[j] == 0.0);
    CHECK(lp.upper[j] == 1.0);
  }

  sub.allow_pad = false;
  CHECK(build_clause_lp(sub).upper[0] == 0.0);
}

TEST_CASE("exact_clause_objective charges hinge, sums, and penalties") {
  auto sub = make_sub({{1, 1, 0}, {1, 0, 1}, {1, 1, 1}}, {1, 1, 0}, 0.1, 2.0);

  // all-zero: both target-1 rows miss
  CHECK(exact_clause_objective(sub, std::vector<std::uint8_t>{0, 0, 0}) == 2.0);
  // pad only: hinge satisfied, negative sums its pad, pad_cost charged
  CHECK(exact_clause_objective(sub, std::vector<std::uint8_t>{1, 0, 0}) ==
        0.0 + 1.0 + 2.0);
  // f1: second target-1 row missed, negative has f1
  CHECK(exact_clause_objective(sub, std::vector<std::uint8_t>{0, 1, 0}) ==
        doctest::Approx(1.0 + 1.0 + 0.1));
  // f1+f2: full coverage, negative counts both
  CHECK(exact_clause_objective(sub, std::vector<std::uint8_t>{0, 1, 1}) ==
        doctest::Approx(0.0 + 2.0 + 0.2));

  CHECK_THROWS_AS(exact_clause_objective(sub, std::vector<std::uint8_t>{0, 1}),
                  std::invalid_argument);
}

TEST_CASE("round_lp sweeps thresholds and keeps the exact best") {
  auto sub = make_sub({{1, 1, 0}, {1, 0, 1}, {1, 0, 1}}, {1, 1, 0}, 0.1);
  Clause c = round_lp({0.0, 1.0, 0.4}, sub);
  CHECK(c.w == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(c.objective_value == doctest::Approx(1.1));
}

TEST_CASE("round_lp breaks exact ties toward fewer features") {
  auto sub = make_sub({{1, 1, 1}}, {1}, 0.0);
  Clause c = round_lp({0.0, 1.0, 0.5}, sub);
  CHECK(c.objective_value == 0.0);
  CHECK(c.w == std::vector<std::uint8_t>{0, 1, 0});  // {f1,f2} ties at 0
}

TEST_CASE("round_lp never selects the pad when disallowed") {
  auto sub = make_sub({{1, 0, 0}}, {1}, 0.0);
  sub.allow_pad = false;
  Clause c = round_lp({1.0, 0.0, 0.0}, sub);
  CHECK(c.w[0] == 0);
}

TEST_CASE("learn_clause matches brute force on mid-size subproblems") {
  oracle::Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    ClauseSubproblem sub = oracle::random_subproblem(rng, 12, 8);
    Clause c = learn_clause(sub);
    REQUIRE_FALSE(c.approximate);

    double brute = oracle::brute_force_clause_min(sub);
    CHECK(c.lp_value <= brute + 1e-6);              // relaxation lower-bounds
    CHECK(c.objective_value >= c.lp_value - 1e-6);  // rounding cannot beat it
    CHECK(c.objective_value ==
          doctest::Approx(exact_clause_objective(sub, c.w)).epsilon(1e-12));
  }
}

TEST_CASE("huge theta forces the cheapest structural answer") {
  // positives and negatives both present: disabling (pad) costs the negatives,
  // selecting anything costs theta; all-zero costs the positives
  auto sub = make_sub({{1, 1, 0}, {1, 0, 1}, {1, 1, 1}}, {1, 1, 0}, 1000.0);
  Clause c = learn_clause(sub);
  double best_structural = std::min(2.0 /* all-zero */, 1.0 /* pad */);
  CHECK(c.objective_value == best_structural);
  CHECK(c.w == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("warm-started relearn reproduces the cold answer") {
  oracle::Rng rng(99);
  ClauseSubproblem sub = oracle::random_subproblem(rng, 20, 10);
  LpWarmStart warm;
  Clause cold = learn_clause(sub, {}, &warm);
  Clause again = learn_clause(sub, {}, &warm);
  CHECK(again.w == cold.w);
  CHECK(again.lp_value == doctest::Approx(cold.lp_value).epsilon(1e-9));

  // nudging theta keeps the warm basis usable
  sub.theta += 0.05;
  Clause nudged = learn_clause(sub, {}, &warm);
  Clause fresh = learn_clause(sub);
  CHECK(nudged.w == fresh.w);
  CHECK(nudged.lp_value == doctest::Approx(fresh.lp_value).epsilon(1e-9));
}

TEST_CASE("degenerate subproblems are rejected") {
  ClauseSubproblem empty;
  CHECK_THROWS_AS(learn_clause(empty), std::invalid_argument);

  auto sub = make_sub({{1, 0}}, {1}, -0.5);
  CHECK_THROWS_AS(learn_clause(sub), std::invalid_argument);

  auto bad_target = make_sub({{1, 0}}, {2}, 0.0);
  CHECK_THROWS_AS(learn_clause(bad_target), std::invalid_argument);
}
