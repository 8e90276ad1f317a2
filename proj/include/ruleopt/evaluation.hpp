#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ruleopt/dataset.hpp"
#include "ruleopt/rule.hpp"
#include "ruleopt/two_level.hpp"

namespace ruleopt {

// Sorted ascending, strictly positive.
struct ThetaGrid {
  std::vector<double> values;

  static ThetaGrid log_spaced(double lo, double hi, int count);
  // "lo:hi:Nlog" for log spacing, or a comma-separated list of values.
  static ThetaGrid parse(const std::string& spec);
};

double zero_one_error(std::span<const std::uint8_t> pred,
                      std::span<const std::uint8_t> y);

struct CvConfig {
  LearnerConfig learner;  // theta is overwritten by the per-fold tuner
  int k = 10;
  int inner_k = 5;
  ThetaGrid grid = ThetaGrid::log_spaced(1e-4, 50.0, 10);
  int num_thresholds = 9;  // raw-table path: quantile count per continuous column
  std::uint64_t seed = 0;
};

struct FoldResult {
  double test_error = 0.0;
  std::size_t sparsity = 0;
  double chosen_theta = 0.0;
  double seconds = 0.0;  // wall clock; deliberately left out of the JSON report
  RuleMatrix rule;
};

struct CVReport {
  int k = 0;
  std::vector<FoldResult> folds;
  double mean_error = 0.0;
  double sem = 0.0;  // sample standard deviation of fold errors / sqrt(k)
  double mean_sparsity = 0.0;
};

// Inner stratified CV over the grid; lowest mean validation error wins, ties
// go to the larger theta. A single-class training partition returns the
// largest grid value with a warning.
double tune_theta(const BinaryDataset& train, const LearnerConfig& cfg,
                  const ThetaGrid& grid, int inner_k);

// Outer stratified k-fold protocol. The raw-table overload re-derives the
// binarization thresholds from each fold's training partition, so held-out
// rows never touch them; the pre-binarized overload skips that step. Fold
// fits run with jobs=1; `learner.jobs` parallelizes across folds instead.
CVReport cross_validate(const RawTable& table, const CvConfig& cfg);
CVReport cross_validate(const BinaryDataset& data, const CvConfig& cfg);

std::string report_json(const CVReport& report);
// Aligned one-row table: error% with SEM in parentheses plus feature counts.
std::string report_table(const std::string& name, const CVReport& report);

}  // namespace ruleopt
