#include "ruleopt/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ruleopt/parallel.hpp"

namespace ruleopt {

namespace {

void check_grid(const ThetaGrid& grid) {
  if (grid.values.empty()) throw std::invalid_argument("theta grid is empty");
  for (double v : grid.values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("theta grid values must be positive finite");
  if (!std::is_sorted(grid.values.begin(), grid.values.end()))
    throw std::invalid_argument("theta grid must be sorted ascending");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

std::vector<FoldSplit> split_indices(const FoldPlan& plan) {
  std::vector<FoldSplit> splits(plan.k);
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
    int f = plan.assignment[i];
    for (int g = 0; g < plan.k; ++g)
      (g == f ? splits[g].test : splits[g].train).push_back(i);
  }
  return splits;
}

void finish_report(CVReport& report) {
  const auto k = static_cast<double>(report.folds.size());
  double err_sum = 0.0, sp_sum = 0.0;
  for (const FoldResult& fr : report.folds) {
    err_sum += fr.test_error;
    sp_sum += static_cast<double>(fr.sparsity);
  }
  report.mean_error = err_sum / k;
  report.mean_sparsity = sp_sum / k;
  double ss = 0.0;
  for (const FoldResult& fr : report.folds) {
    double d = fr.test_error - report.mean_error;
    ss += d * d;
  }
  report.sem = report.folds.size() > 1
                   ? std::sqrt(ss / (k - 1.0)) / std::sqrt(k)
                   : 0.0;
}

// shared outer loop; `make_fold` materializes (train, test) for one fold
template <typename MakeFold>
CVReport run_outer(std::span<const std::uint8_t> labels, const CvConfig& cfg,
                   MakeFold&& make_fold) {
  if (cfg.k < 2) throw std::invalid_argument("fold count must be >= 2");
  if (cfg.inner_k < 2) throw std::invalid_argument("inner fold count must be >= 2");
  check_grid(cfg.grid);

  FoldPlan plan = stratified_folds(labels, cfg.k, cfg.seed);
  std::vector<FoldSplit> splits = split_indices(plan);

  CVReport report;
  report.k = cfg.k;
  report.folds.resize(cfg.k);

  parallel_for(static_cast<std::size_t>(cfg.k), cfg.learner.jobs, [&](std::size_t f) {
    auto start = std::chrono::steady_clock::now();
    auto [train, test] = make_fold(splits[f]);

    LearnerConfig lc = cfg.learner;
    lc.jobs = 1;
    lc.seed = mix_seed(cfg.seed, f);
    lc.theta = tune_theta(train, lc, cfg.grid, cfg.inner_k);

    auto [rule, trace] = fit(train, lc);
    Prediction pred = predict(test, rule);

    FoldResult& fr = report.folds[f];
    fr.test_error = zero_one_error(pred.labels, test.y);
    fr.sparsity = sparsity(rule);
    fr.chosen_theta = lc.theta;
    fr.rule = std::move(rule);
    fr.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
  });

  finish_report(report);
  return report;
}

}  // namespace

ThetaGrid ThetaGrid::log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo))
    throw std::invalid_argument("log grid needs 0 < lo <= hi");
  if (count < 1) throw std::invalid_argument("grid needs at least one value");
  ThetaGrid grid;
  if (count == 1) {
    grid.values.push_back(lo);
    return grid;
  }
  double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < count; ++i)
    grid.values.push_back(
        std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                           static_cast<double>(count - 1)));
  grid.values.front() = lo;
  grid.values.back() = hi;
  return grid;
}

ThetaGrid ThetaGrid::parse(const std::string& spec) {
  auto parse_value = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("bad grid number: " + s);
    }
  };

  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3 || parts[2].size() < 4 ||
        parts[2].substr(parts[2].size() - 3) != "log")
      throw std::invalid_argument("grid spec must be lo:hi:Nlog or a comma list");
    double lo = parse_value(parts[0]);
    double hi = parse_value(parts[1]);
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(parts[2].substr(0, parts[2].size() - 3), &used);
      if (used != parts[2].size() - 3) throw std::invalid_argument(parts[2]);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad grid count: " + parts[2]);
    }
    return log_spaced(lo, hi, count);
  }

  ThetaGrid grid;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) grid.values.push_back(parse_value(part));
  std::sort(grid.values.begin(), grid.values.end());
  check_grid(grid);
  return grid;
}

double zero_one_error(std::span<const std::uint8_t> pred,
                      std::span<const std::uint8_t> y) {
  if (pred.size() != y.size())
    throw std::invalid_argument("prediction/label length mismatch");
  if (pred.empty()) throw std::invalid_argument("empty prediction vector");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) wrong += pred[i] != y[i];
  return static_cast<double>(wrong) / static_cast<double>(pred.size());
}

double tune_theta(const BinaryDataset& train, const LearnerConfig& cfg,
                  const ThetaGrid& grid, int inner_k) {
  check_grid(grid);
  if (inner_k < 2) throw std::invalid_argument("inner fold count must be >= 2");

  bool has_pos = false, has_neg = false;
  for (std::uint8_t label : train.y) (label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    std::cerr << "warning: single-class training partition; theta tuning "
                 "degenerates to the largest grid value\n";
    return grid.values.back();
  }

  FoldPlan plan = stratified_folds(train.y, inner_k, cfg.seed);
  std::vector<FoldSplit> splits = split_indices(plan);
  std::vector<BinaryDataset> inner_train, inner_val;
  inner_train.reserve(splits.size());
  inner_val.reserve(splits.size());
  for (const FoldSplit& s : splits) {
    inner_train.push_back(subset(train, s.train));
    inner_val.push_back(subset(train, s.test));
  }

  double best_theta = grid.values.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (double theta : grid.values) {  // ascending, so <= keeps the larger theta
    double total = 0.0;
    for (std::size_t f = 0; f < splits.size(); ++f) {
      LearnerConfig lc = cfg;
      lc.theta = theta;
      lc.seed = mix_seed(cfg.seed, f + 1000);
      auto [rule, trace] = fit(inner_train[f], lc);
      Prediction pred = predict(inner_val[f], rule);
      total += zero_one_error(pred.labels, inner_val[f].y);
    }
    double mean = total / static_cast<double>(splits.size());
    if (mean <= best_err) {
      best_err = mean;
      best_theta = theta;
    }
  }
  return best_theta;
}

CVReport cross_validate(const RawTable& table, const CvConfig& cfg) {
  if (table.labels.empty())
    throw std::invalid_argument("cross-validation needs labeled rows");
  if (cfg.num_thresholds < 1)
    throw std::invalid_argument("threshold count must be >= 1");
  return run_outer(table.labels, cfg, [&](const FoldSplit& s) {
    RawTable train_raw = subset(table, s.train);
    RawTable test_raw = subset(table, s.test);
    BinaryDataset train = binarize(train_raw, cfg.num_thresholds);
    BinaryDataset test =
        binarize_with_provenance(test_raw, train.feature_names, train.provenance);
    return std::make_pair(std::move(train), std::move(test));
  });
}

CVReport cross_validate(const BinaryDataset& data, const CvConfig& cfg) {
  if (data.num_samples() == 0)
    throw std::invalid_argument("cross-validation needs labeled rows");
  return run_outer(data.y, cfg, [&](const FoldSplit& s) {
    return std::make_pair(subset(data, s.train), subset(data, s.test));
  });
}

std::string report_json(const CVReport& report) {
  nlohmann::json j;
  j["k"] = report.k;
  j["mean_error"] = report.mean_error;
  j["sem"] = report.sem;
  j["mean_sparsity"] = report.mean_sparsity;
  j["folds"] = nlohmann::json::array();
  for (const FoldResult& fr : report.folds) {
    nlohmann::json jf;
    jf["test_error"] = fr.test_error;
    jf["sparsity"] = fr.sparsity;
    jf["chosen_theta"] = fr.chosen_theta;
    j["folds"].push_back(jf);
  }
  return j.dump(2) + "\n";
}

std::string report_table(const std::string& name, const CVReport& report) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %6.1f (%.1f) %10.1f\n",
                name.c_str(), report.mean_error * 100.0, report.sem * 100.0,
                report.mean_sparsity);
  std::string out = "dataset              error% (sem)   features\n";
  out += line;
  return out;
}

}  // namespace ruleopt
