#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ruleopt/clause_lp.hpp"
#include "ruleopt/dataset.hpp"
#include "ruleopt/rule.hpp"
#include "ruleopt/simplex.hpp"

namespace ruleopt {

enum class Algorithm { BCD, AM, SC, OCRL };
enum class BcdOrder { Greedy, Cyclic, Random };
enum class TieBreak { Plain, Clustering };

struct LearnerConfig {
  int R = 5;
  double theta = 0.0;
  double pad_cost = 0.0;
  int max_iters = 100;
  Algorithm algorithm = Algorithm::BCD;
  Polarity polarity = Polarity::CNF;
  BcdOrder order = BcdOrder::Greedy;
  double eps_obj = 1e-9;  // acceptance threshold scale: eps_obj * (1 + |objective|)
  std::uint64_t seed = 0;
  int jobs = 1;
  LpOptions lp;
};

inline constexpr std::uint8_t kDontCare = 2;

// v[i][r] over {0, 1, kDontCare}: positives all 1; each negative has a single
// 0 at its assigned clause and kDontCare elsewhere
struct IdealAssignment {
  BinaryMatrix v;
};

struct FitTrace {
  std::vector<double> objectives;      // best value after each iteration, [0] = init
  std::vector<double> raw_objectives;  // per-iterate value (AM iterates can oscillate)
  std::vector<int> accepted_clause;    // BCD: accepted clause per iteration, -1 if none
  std::string stop_reason;
};

// Regularized Hamming objective of a CNF rule: hinge per positive and clause,
// min clause sum per negative, theta per selected non-pad entry, pad_cost per
// selected pad entry. Sums include the pad column; the theta term does not.
double objective(const RuleMatrix& rule, const BinaryDataset& data, double theta,
                 double pad_cost = 0.0);

IdealAssignment assign_ideal(const RuleMatrix& rule, const BinaryDataset& data,
                             TieBreak tie_break);

// Retains all positives (target 1) and the negatives on which every clause
// other than r0 outputs 1 (target 0).
ClauseSubproblem bcd_subproblem(std::size_t r0, const RuleMatrix& rule,
                                const BinaryDataset& data, double theta,
                                double pad_cost);

std::pair<RuleMatrix, FitTrace> bcd_fit(const BinaryDataset& data,
                                        const LearnerConfig& cfg,
                                        const RuleMatrix& init);

std::pair<RuleMatrix, FitTrace> am_fit(const BinaryDataset& data,
                                       const LearnerConfig& cfg,
                                       const RuleMatrix& init);

RuleMatrix sc_fit(const BinaryDataset& data, const LearnerConfig& cfg);

/// Dispatch: OCRL runs BCD with R forced to 1; BCD and AM initialize from
// sc_fit; a DNF request trains CNF on complemented labels and returns the
// De Morgan dual.
std::pair<RuleMatrix, FitTrace> fit(const BinaryDataset& data,
                                    const LearnerConfig& cfg);

}  // namespace ruleopt
