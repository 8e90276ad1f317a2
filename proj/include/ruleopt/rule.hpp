#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ruleopt/dataset.hpp"

namespace ruleopt {

enum class Polarity { CNF, DNF };

// Two-level rule. w is stored clause-major: w[r][j] with j=0 the pad row,
// so w[r][0]=1 disables clause r (CNF: clause outputs 1 and drops out of
// the conjunction; DNF: clause contributes 0 to the disjunction).
struct RuleMatrix {
  std::vector<std::vector<std::uint8_t>> w;
  Polarity polarity = Polarity::CNF;
  std::vector<std::string> feature_names;
  std::vector<FeatureProvenance> provenance;

  std::size_t num_clauses() const { return w.size(); }
  std::size_t num_features() const { return w.empty() ? 0 : w[0].size(); }
  bool clause_disabled(std::size_t r) const { return w[r][0] != 0; }
};

struct Prediction {
  BinaryMatrix clause_outputs;        // n x R
  std::vector<std::uint8_t> labels;   // n
};

// OR over j of a_row[j] * w_col[j]
int clause_output(std::span<const std::uint8_t> a_row,
                  std::span<const std::uint8_t> w_col);

Prediction predict(const BinaryDataset& data, const RuleMatrix& rule);

// selected non-pad features summed over enabled clauses
std::size_t sparsity(const RuleMatrix& rule);

// Flips polarity and maps every selected non-pad feature to its negation
// partner; pad row unchanged. predict(dual) is the complement of predict(rule).
RuleMatrix demorgan_dual(const RuleMatrix& rule, const std::vector<int>& negation_map);

std::string format_rule(const RuleMatrix& rule);

void save_rule(const RuleMatrix& rule, const std::string& path);
RuleMatrix load_rule(const std::string& path);

}  // namespace ruleopt
