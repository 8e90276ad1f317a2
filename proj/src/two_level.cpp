#include "ruleopt/two_level.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "ruleopt/parallel.hpp"

namespace ruleopt {

namespace {

double improvement_eps(double eps, double current) {
  return eps * (1.0 + std::abs(current));
}

void check_dims(const RuleMatrix& rule, const BinaryDataset& data) {
  if (rule.num_clauses() == 0)
    throw std::invalid_argument("rule has no clauses");
  if (rule.num_features() != data.num_features())
    throw std::invalid_argument("rule/data feature dimension mismatch");
  if (rule.polarity != Polarity::CNF)
    throw std::invalid_argument("optimizer operates on the CNF form");
}

std::vector<std::vector<std::size_t>> selected_columns(const RuleMatrix& rule) {
  std::vector<std::vector<std::size_t>> sel(rule.num_clauses());
  for (std::size_t r = 0; r < rule.num_clauses(); ++r)
    for (std::size_t j = 0; j < rule.w[r].size(); ++j)
      if (rule.w[r][j]) sel[r].push_back(j);
  return sel;
}

int clause_sum(std::span<const std::uint8_t> row, const std::vector<std::size_t>& sel) {
  int s = 0;
  for (std::size_t j : sel) s += row[j];
  return s;
}

}  // namespace

double objective(const RuleMatrix& rule, const BinaryDataset& data, double theta,
                 double pad_cost) {
  check_dims(rule, data);
  if (theta < 0 || pad_cost < 0)
    throw std::invalid_argument("negative cost weight");
  const std::size_t R = rule.num_clauses();
  auto sel = selected_columns(rule);

  std::vector<double> pos_loss(R, 0.0), neg_loss(R, 0.0);
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    auto row = data.a.row(i);
    if (data.y[i]) {
      for (std::size_t r = 0; r < R; ++r) {
        bool hit = false;
        for (std::size_t j : sel[r])
          if (row[j]) {
            hit = true;
            break;
          }
        if (!hit) pos_loss[r] += 1.0;
      }
    } else {
      int best = std::numeric_limits<int>::max();
      std::size_t r0 = 0;
      for (std::size_t r = 0; r < R; ++r) {
        int s = clause_sum(row, sel[r]);
        if (s < best) {
          best = s;
          r0 = r;
        }
      }
      neg_loss[r0] += static_cast<double>(best);
    }
  }

  double total = 0.0;
  for (std::size_t r = 0; r < R; ++r) {
    int num_sel = 0;
    for (std::size_t j = 1; j < rule.w[r].size(); ++j) num_sel += rule.w[r][j];
    double penalty = theta * static_cast<double>(num_sel) +
                     pad_cost * static_cast<double>(rule.w[r][0]);
    total += pos_loss[r] + neg_loss[r] + penalty;
  }
  return total;
}

IdealAssignment assign_ideal(const RuleMatrix& rule, const BinaryDataset& data,
                             TieBreak tie_break) {
  check_dims(rule, data);
  const std::size_t n = data.num_samples();
  const std::size_t R = rule.num_clauses();
  const std::size_t d1 = data.num_features();
  auto sel = selected_columns(rule);

  IdealAssignment out;
  out.v = BinaryMatrix(n, R);

  std::vector<int> sums(R);
  std::vector<std::uint8_t> minimal(R);

  // clustering pass 1: per-clause center over negatives whose minimal set
  // contains the clause, ties included
  std::vector<std::vector<double>> center;
  std::vector<std::size_t> center_count;
  if (tie_break == TieBreak::Clustering) {
    center.assign(R, std::vector<double>(d1, 0.0));
    center_count.assign(R, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (data.y[i]) continue;
      auto row = data.a.row(i);
      int best = std::numeric_limits<int>::max();
      for (std::size_t r = 0; r < R; ++r) {
        sums[r] = clause_sum(row, sel[r]);
        best = std::min(best, sums[r]);
      }
      for (std::size_t r = 0; r < R; ++r) {
        if (sums[r] != best) continue;
        ++center_count[r];
        for (std::size_t j = 0; j < d1; ++j) center[r][j] += row[j];
      }
    }
    for (std::size_t r = 0; r < R; ++r)
      if (center_count[r])
        for (std::size_t j = 0; j < d1; ++j)
          center[r][j] /= static_cast<double>(center_count[r]);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (data.y[i]) {
      for (std::size_t r = 0; r < R; ++r) out.v.at(i, r) = 1;
      continue;
    }
    auto row = data.a.row(i);
    int best = std::numeric_limits<int>::max();
    for (std::size_t r = 0; r < R; ++r) {
      sums[r] = clause_sum(row, sel[r]);
      best = std::min(best, sums[r]);
    }
    std::size_t ties = 0;
    for (std::size_t r = 0; r < R; ++r) {
      minimal[r] = sums[r] == best ? 1 : 0;
      ties += minimal[r];
    }

    std::size_t r0 = 0;
    if (ties == 1 || tie_break == TieBreak::Plain) {
      while (!minimal[r0]) ++r0;
    } else {
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < R; ++r) {
        if (!minimal[r]) continue;
        double dist = 0.0;
        for (std::size_t j = 0; j < d1; ++j)
          dist += std::abs(static_cast<double>(row[j]) - center[r][j]);
        if (dist < best_dist) {
          best_dist = dist;
          r0 = r;
        }
      }
    }
    for (std::size_t r = 0; r < R; ++r)
      out.v.at(i, r) = r == r0 ? 0 : kDontCare;
  }
  return out;
}

namespace {

struct RetainedRows {
  std::vector<std::size_t> rows;
  std::vector<std::uint8_t> target;
};

// rows a single-clause re-learn must respect: every positive, plus the
// negatives whose other clauses all output 1 (so this clause alone decides)
RetainedRows bcd_rows(std::size_t r0, const RuleMatrix& rule,
                      const BinaryDataset& data) {
  RetainedRows out;
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    if (data.y[i]) {
      out.rows.push_back(i);
      out.target.push_back(1);
      continue;
    }
    auto row = data.a.row(i);
    bool others_all_one = true;
    for (std::size_t r = 0; r < rule.num_clauses(); ++r) {
      if (r == r0) continue;
      if (clause_output(row, rule.w[r]) == 0) {
        others_all_one = false;
        break;
      }
    }
    if (others_all_one) {
      out.rows.push_back(i);
      out.target.push_back(0);
    }
  }
  return out;
}

ClauseSubproblem make_subproblem(const RetainedRows& kept,
                                 const BinaryDataset& data, double theta,
                                 double pad_cost) {
  ClauseSubproblem sub;
  sub.a = BinaryMatrix(kept.rows.size(), data.num_features());
  for (std::size_t k = 0; k < kept.rows.size(); ++k) {
    auto src = data.a.row(kept.rows[k]);
    std::copy(src.begin(), src.end(), sub.a.row(k).begin());
  }
  sub.target = kept.target;
  sub.theta = theta;
  sub.pad_cost = pad_cost;
  return sub;
}

}  // namespace

ClauseSubproblem bcd_subproblem(std::size_t r0, const RuleMatrix& rule,
                                const BinaryDataset& data, double theta,
                                double pad_cost) {
  check_dims(rule, data);
  if (r0 >= rule.num_clauses())
    throw std::invalid_argument("clause index out of range");
  return make_subproblem(bcd_rows(r0, rule, data), data, theta, pad_cost);
}

namespace {

// one fit's worth of per-clause solve state: memoized clauses keyed by the
// retained-sample/target signature, plus a warm basis per clause slot
struct ClauseSolver {
  const LearnerConfig& cfg;
  std::vector<std::unordered_map<std::string, Clause>> cache;
  std::vector<LpWarmStart> warm;

  explicit ClauseSolver(const LearnerConfig& c)
      : cfg(c), cache(c.R), warm(c.R) {}

  static std::string key_of(const RetainedRows& kept) {
    std::string key;
    key.reserve(kept.rows.size() * 4);
    for (std::size_t k = 0; k < kept.rows.size(); ++k) {
      std::uint32_t packed =
          static_cast<std::uint32_t>(kept.rows[k] << 1) | kept.target[k];
      char buf[4];
      std::memcpy(buf, &packed, 4);
      key.append(buf, 4);
    }
    return key;
  }

  Clause solve(std::size_t slot, const ClauseSubproblem& sub, const std::string& key) {
    auto& slot_cache = cache[slot];
    auto it = slot_cache.find(key);
    if (it != slot_cache.end()) return it->second;
    Clause clause = learn_clause(sub, cfg.lp, &warm[slot]);
    slot_cache.emplace(key, clause);
    return clause;
  }
};

std::vector<std::uint8_t> disabled_clause(std::size_t d1) {
  std::vector<std::uint8_t> w(d1, 0);
  w[0] = 1;
  return w;
}

void validate_config(const LearnerConfig& cfg) {
  if (cfg.R < 1) throw std::invalid_argument("R must be >= 1");
  if (cfg.theta < 0) throw std::invalid_argument("theta must be >= 0");
  if (cfg.pad_cost < 0) throw std::invalid_argument("pad_cost must be >= 0");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (cfg.eps_obj < 0) throw std::invalid_argument("eps_obj must be >= 0");
}

}  // namespace

std::pair<RuleMatrix, FitTrace> bcd_fit(const BinaryDataset& data,
                                        const LearnerConfig& cfg,
                                        const RuleMatrix& init) {
  validate_config(cfg);
  check_dims(init, data);
  if (init.num_clauses() != static_cast<std::size_t>(cfg.R))
    throw std::invalid_argument("init clause count differs from cfg.R");

  const std::size_t R = init.num_clauses();
  RuleMatrix rule = init;
  double obj = objective(rule, data, cfg.theta, cfg.pad_cost);

  FitTrace trace;
  trace.objectives.push_back(obj);
  trace.raw_objectives.push_back(obj);
  trace.stop_reason = "max iterations";

  ClauseSolver solver(cfg);
  std::mt19937_64 rng(cfg.seed);
  int rejected_streak = 0;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    std::vector<std::size_t> slots;
    if (cfg.order == BcdOrder::Greedy) {
      for (std::size_t r = 0; r < R; ++r) slots.push_back(r);
    } else if (cfg.order == BcdOrder::Cyclic) {
      slots.push_back(static_cast<std::size_t>(iter) % R);
    } else {
      slots.push_back(static_cast<std::size_t>(rng() % R));
    }

    // tentative re-learn per slot; the retained-row signature keys a cache so
    // revisiting an already-solved configuration costs a lookup
    std::vector<Clause> candidates(slots.size());
    std::vector<ClauseSubproblem> subs(slots.size());
    std::vector<std::string> keys(slots.size());
    for (std::size_t k = 0; k < slots.size(); ++k) {
      RetainedRows kept = bcd_rows(slots[k], rule, data);
      keys[k] = ClauseSolver::key_of(kept);
      subs[k] = make_subproblem(kept, data, cfg.theta, cfg.pad_cost);
    }

    int best_k = -1;
    double best_obj = obj;
    std::vector<double> cand_obj(slots.size());
    parallel_for(slots.size(), cfg.jobs, [&](std::size_t k) {
      candidates[k] = solver.solve(slots[k], subs[k], keys[k]);
      RuleMatrix probe = rule;
      probe.w[slots[k]] = candidates[k].w;
      cand_obj[k] = objective(probe, data, cfg.theta, cfg.pad_cost);
    });
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (cand_obj[k] < best_obj) {
        best_obj = cand_obj[k];
        best_k = static_cast<int>(k);
      }
    }

    if (best_k >= 0 && obj - best_obj > improvement_eps(cfg.eps_obj, obj)) {
      rule.w[slots[best_k]] = candidates[best_k].w;
      obj = best_obj;
      trace.accepted_clause.push_back(static_cast<int>(slots[best_k]));
      rejected_streak = 0;
    } else {
      trace.accepted_clause.push_back(-1);
      ++rejected_streak;
    }
    trace.objectives.push_back(obj);
    trace.raw_objectives.push_back(obj);

    int patience = cfg.order == BcdOrder::Greedy ? 1 : cfg.R;
    if (rejected_streak >= patience) {
      trace.stop_reason = "no improvement";
      break;
    }
  }
  return {rule, trace};
}

std::pair<RuleMatrix, FitTrace> am_fit(const BinaryDataset& data,
                                       const LearnerConfig& cfg,
                                       const RuleMatrix& init) {
  validate_config(cfg);
  check_dims(init, data);
  if (init.num_clauses() != static_cast<std::size_t>(cfg.R))
    throw std::invalid_argument("init clause count differs from cfg.R");

  const std::size_t R = init.num_clauses();
  const std::size_t d1 = data.num_features();
  RuleMatrix rule = init;
  RuleMatrix best = rule;
  double best_obj = objective(rule, data, cfg.theta, cfg.pad_cost);

  FitTrace trace;
  trace.objectives.push_back(best_obj);
  trace.raw_objectives.push_back(best_obj);
  trace.stop_reason = "max iterations";

  ClauseSolver solver(cfg);
  RuleMatrix prev = rule;
  int stale = 0;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    IdealAssignment ideal = assign_ideal(rule, data, TieBreak::Clustering);

    std::vector<ClauseSubproblem> subs(R);
    std::vector<std::string> keys(R);
    std::vector<char> empty_sub(R, 0);
    for (std::size_t r = 0; r < R; ++r) {
      RetainedRows kept;
      for (std::size_t i = 0; i < data.num_samples(); ++i) {
        std::uint8_t v = ideal.v.at(i, r);
        if (v == kDontCare) continue;
        kept.rows.push_back(i);
        kept.target.push_back(v);
      }
      if (kept.rows.empty()) {
        empty_sub[r] = 1;
        continue;
      }
      keys[r] = ClauseSolver::key_of(kept);
      subs[r] = make_subproblem(kept, data, cfg.theta, cfg.pad_cost);
    }

    parallel_for(R, cfg.jobs, [&](std::size_t r) {
      if (empty_sub[r]) {
        rule.w[r].assign(d1, 0);  // nothing constrains the clause; zero is free
        return;
      }
      Clause clause = solver.solve(r, subs[r], keys[r]);
      rule.w[r] = clause.w;
    });

    double obj = objective(rule, data, cfg.theta, cfg.pad_cost);
    trace.raw_objectives.push_back(obj);
    if (best_obj - obj > improvement_eps(cfg.eps_obj, best_obj)) {
      best = rule;
      best_obj = obj;
      stale = 0;
    } else {
      ++stale;
    }
    trace.objectives.push_back(best_obj);

    if (rule.w == prev.w) {
      trace.stop_reason = "fixed point";
      break;
    }
    prev = rule;
    if (stale >= 5) {
      trace.stop_reason = "stale";
      break;
    }
  }
  return {best, trace};
}

RuleMatrix sc_fit(const BinaryDataset& data, const LearnerConfig& cfg) {
  validate_config(cfg);
  const std::size_t R = static_cast<std::size_t>(cfg.R);
  const std::size_t d1 = data.num_features();

  RuleMatrix rule;
  rule.polarity = Polarity::CNF;
  rule.feature_names = data.feature_names;
  rule.provenance = data.provenance;
  rule.w.assign(R, disabled_clause(d1));

  std::vector<std::size_t> positives, uncovered;
  for (std::size_t i = 0; i < data.num_samples(); ++i)
    (data.y[i] ? positives : uncovered).push_back(i);

  std::size_t slot = 0;
  while (slot < R && !uncovered.empty()) {
    ClauseSubproblem sub;
    sub.a = BinaryMatrix(positives.size() + uncovered.size(), d1);
    sub.target.reserve(positives.size() + uncovered.size());
    std::size_t k = 0;
    for (std::size_t i : positives) {
      auto src = data.a.row(i);
      std::copy(src.begin(), src.end(), sub.a.row(k++).begin());
      sub.target.push_back(1);
    }
    for (std::size_t i : uncovered) {
      auto src = data.a.row(i);
      std::copy(src.begin(), src.end(), sub.a.row(k++).begin());
      sub.target.push_back(0);
    }
    sub.theta = cfg.theta;
    sub.pad_cost = cfg.pad_cost;

    Clause clause = learn_clause(sub, cfg.lp);

    std::vector<std::size_t> still_uncovered;
    for (std::size_t i : uncovered)
      if (clause_output(data.a.row(i), clause.w) != 0)
        still_uncovered.push_back(i);
    if (still_uncovered.size() == uncovered.size()) break;  // no progress

    rule.w[slot++] = clause.w;
    uncovered = std::move(still_uncovered);
  }
  return rule;
}

std::pair<RuleMatrix, FitTrace> fit(const BinaryDataset& data,
                                    const LearnerConfig& cfg) {
  validate_config(cfg);
  if (data.num_samples() == 0)
    throw std::invalid_argument("cannot fit an empty dataset");

  BinaryDataset working = data;
  if (cfg.polarity == Polarity::DNF)
    for (auto& label : working.y) label = label ? 0 : 1;

  LearnerConfig ecfg = cfg;
  ecfg.polarity = Polarity::CNF;
  if (cfg.algorithm == Algorithm::OCRL) ecfg.R = 1;

  RuleMatrix rule;
  FitTrace trace;
  RuleMatrix init = sc_fit(working, ecfg);
  init.feature_names = working.feature_names;
  init.provenance = working.provenance;

  switch (cfg.algorithm) {
    case Algorithm::SC:
      rule = init;
      trace.objectives.push_back(objective(rule, working, ecfg.theta, ecfg.pad_cost));
      trace.raw_objectives = trace.objectives;
      trace.stop_reason = "set covering";
      break;
    case Algorithm::BCD:
    case Algorithm::OCRL:
      std::tie(rule, trace) = bcd_fit(working, ecfg, init);
      break;
    case Algorithm::AM:
      std::tie(rule, trace) = am_fit(working, ecfg, init);
      break;
  }

  rule.feature_names = working.feature_names;
  rule.provenance = working.provenance;

  if (cfg.polarity == Polarity::DNF) {
    std::vector<int> negation_map(rule.num_features(), -1);
    for (std::size_t j = 0; j < rule.provenance.size(); ++j)
      negation_map[j] = rule.provenance[j].negation_partner;
    rule = demorgan_dual(rule, negation_map);
  }
  return {rule, trace};
}

}  // namespace ruleopt
