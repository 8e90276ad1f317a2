#include "ruleopt/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ruleopt {

void LinearProgram::validate() const {
  const std::size_t n = objective.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("lp: bound vectors must match objective length");
  for (double v : objective)
    if (!std::isfinite(v))
      throw std::invalid_argument("lp: objective coefficient must be finite");
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]))
      throw std::invalid_argument("lp: bounds must be finite");
    if (lower[j] > upper[j])
      throw std::invalid_argument("lp: lower bound exceeds upper bound");
  }
  for (const auto& con : constraints) {
    if (con.coeffs.size() != n)
      throw std::invalid_argument("lp: constraint dimension mismatch");
    if (!std::isfinite(con.rhs))
      throw std::invalid_argument("lp: constraint rhs must be finite");
    for (double v : con.coeffs)
      if (!std::isfinite(v))
        throw std::invalid_argument("lp: constraint coefficient must be finite");
  }
}

namespace {

enum class VStat : std::uint8_t { Basic, AtLower, AtUpper };

constexpr double kPivTol = 1e-9;
constexpr double kRatioTie = 1e-9;
constexpr double kDegenStep = 1e-10;
constexpr double kPerturb = 1e-9;
constexpr int kBlandTrigger = 40;
constexpr int kRefactorEvery = 1000;
constexpr int kPolishRounds = 3;

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpOptions& opts, const LpWarmStart* warm)
      : lp_(lp),
        warm_(warm),
        n_(static_cast<int>(lp.objective.size())),
        m_(static_cast<int>(lp.constraints.size())),
        feas_tol_(opts.feas_tol),
        opt_tol_(opts.opt_tol) {
    max_iters_ = opts.max_iters > 0 ? opts.max_iters : 1000 + 10 * (n_ + 2 * m_);
  }

  LpSolution run();

 private:
  enum class LoopOutcome { Converged, Limit, Stall };

  const LinearProgram& lp_;
  const LpWarmStart* warm_;
  int n_, m_;
  double feas_tol_, opt_tol_;
  int max_iters_;

  // equality form A x = rhs; columns [0,n) structural, [n,n+m) logicals
  // (one per row, coefficient +1, bounds encode the relation), then artificials
  std::vector<std::vector<int>> col_rows_;
  std::vector<std::vector<double>> col_vals_;
  std::vector<double> lo_, hi_;
  std::vector<double> rhs_;
  std::vector<VStat> stat_;
  std::vector<int> basic_;  // row -> column
  std::vector<double> xb_;  // value of basic_[i]
  std::vector<double> binv_;
  std::vector<double> y_, alpha_, row_copy_;
  bool phase1_ = false;
  bool bland_ = false;
  bool perturbed_ = false;
  int degen_streak_ = 0;
  int iterations_ = 0;
  double rhs_scale_ = 1.0, bound_scale_ = 1.0;
  std::vector<double> lo_true_, hi_true_;  // unperturbed bounds

  int total_cols() const { return static_cast<int>(col_rows_.size()); }
  bool is_artificial(int j) const { return j >= n_ + m_; }
  double bound_value(int j) const {
    return stat_[j] == VStat::AtUpper ? hi_[j] : lo_[j];
  }
  double active_cost(int j) const {
    if (phase1_) return is_artificial(j) ? 1.0 : 0.0;
    return j < n_ ? lp_.objective[j] : 0.0;
  }

  bool build_columns();  // false: a row cannot be met inside the box
  void perturb_bounds();
  void restore_bounds();
  bool try_warm();
  void cold_start();
  void ftran(int j, std::vector<double>& out) const;
  double reduced_cost(int j) const;
  void compute_duals();
  void recompute_xb();
  bool build_basis(std::vector<int> target);
  int pick_entering() const;
  LoopOutcome iterate();
  bool residuals_ok() const;
  double artificial_total() const;
  void pivot_out_artificials();
  void pin_artificials();
  void update_binv(const std::vector<double>& alpha, int r);
  LpSolution make_solution(LpStatus status) const;
};

bool Simplex::build_columns() {
  col_rows_.assign(n_ + m_, {});
  col_vals_.assign(n_ + m_, {});
  lo_.assign(n_ + m_, 0.0);
  hi_.assign(n_ + m_, 0.0);
  rhs_.resize(m_);

  for (int j = 0; j < n_; ++j) {
    lo_[j] = lp_.lower[j];
    hi_[j] = lp_.upper[j];
  }
  for (int i = 0; i < m_; ++i) {
    const auto& con = lp_.constraints[i];
    rhs_[i] = con.rhs;
    for (int j = 0; j < n_; ++j) {
      double v = con.coeffs[j];
      if (v != 0.0) {
        col_rows_[j].push_back(i);
        col_vals_[j].push_back(v);
      }
    }
  }

  for (int i = 0; i < m_; ++i) {
    const auto& con = lp_.constraints[i];
    double row_min = 0.0, row_max = 0.0;
    for (int j = 0; j < n_; ++j) {
      double v = con.coeffs[j];
      if (v > 0) {
        row_min += v * lo_[j];
        row_max += v * hi_[j];
      } else if (v < 0) {
        row_min += v * hi_[j];
        row_max += v * lo_[j];
      }
    }
    int sj = n_ + i;
    col_rows_[sj].push_back(i);
    col_vals_[sj].push_back(1.0);
    switch (con.relation) {
      case Relation::LessEqual:
        if (con.rhs < row_min) return false;
        lo_[sj] = 0.0;
        hi_[sj] = con.rhs - row_min;
        break;
      case Relation::GreaterEqual:
        if (con.rhs > row_max) return false;
        lo_[sj] = con.rhs - row_max;
        hi_[sj] = 0.0;
        break;
      case Relation::Equal:
        if (con.rhs < row_min || con.rhs > row_max) return false;
        lo_[sj] = 0.0;
        hi_[sj] = 0.0;
        break;
    }
  }

  rhs_scale_ = 1.0;
  for (double h : rhs_) rhs_scale_ = std::max(rhs_scale_, std::abs(h));
  bound_scale_ = 1.0;
  for (int j = 0; j < total_cols(); ++j)
    bound_scale_ = std::max({bound_scale_, std::abs(lo_[j]), std::abs(hi_[j])});
  return true;
}

// Anti-degeneracy: expand every non-fixed bound outward by a tiny
// column-specific amount so ratio tests take strictly positive steps instead
// of stalling on coincident bounds. Deterministic, removed before reporting.
void Simplex::perturb_bounds() {
  lo_true_.assign(lo_.begin(), lo_.begin() + n_ + m_);
  hi_true_.assign(hi_.begin(), hi_.begin() + n_ + m_);
  for (int j = 0; j < n_ + m_; ++j) {
    if (lo_[j] == hi_[j]) continue;
    double f = std::fmod(0.6180339887498949 * (j + 1), 1.0);
    double delta = kPerturb * (1.0 + f) *
                   std::max({1.0, std::abs(lo_[j]), std::abs(hi_[j])});
    lo_[j] -= delta;
    hi_[j] += delta;
  }
  perturbed_ = true;
}

void Simplex::restore_bounds() {
  std::copy(lo_true_.begin(), lo_true_.end(), lo_.begin());
  std::copy(hi_true_.begin(), hi_true_.end(), hi_.begin());
  perturbed_ = false;
}

void Simplex::ftran(int j, std::vector<double>& out) const {
  out.assign(m_, 0.0);
  const auto& rows = col_rows_[j];
  const auto& vals = col_vals_[j];
  for (int i = 0; i < m_; ++i) {
    const double* brow = &binv_[static_cast<std::size_t>(i) * m_];
    double s = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) s += brow[rows[k]] * vals[k];
    out[i] = s;
  }
}

double Simplex::reduced_cost(int j) const {
  double d = active_cost(j);
  const auto& rows = col_rows_[j];
  const auto& vals = col_vals_[j];
  for (std::size_t k = 0; k < rows.size(); ++k) d -= y_[rows[k]] * vals[k];
  return d;
}

void Simplex::compute_duals() {
  y_.assign(m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    double cb = active_cost(basic_[i]);
    if (cb == 0.0) continue;
    const double* brow = &binv_[static_cast<std::size_t>(i) * m_];
    for (int k = 0; k < m_; ++k) y_[k] += cb * brow[k];
  }
}

void Simplex::recompute_xb() {
  std::vector<double> resid(rhs_);
  for (int j = 0; j < total_cols(); ++j) {
    if (stat_[j] == VStat::Basic) continue;
    double v = bound_value(j);
    if (v == 0.0) continue;
    const auto& rows = col_rows_[j];
    const auto& vals = col_vals_[j];
    for (std::size_t k = 0; k < rows.size(); ++k) resid[rows[k]] -= vals[k] * v;
  }
  xb_.assign(m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    const double* brow = &binv_[static_cast<std::size_t>(i) * m_];
    double s = 0.0;
    for (int k = 0; k < m_; ++k) s += brow[k] * resid[k];
    xb_[i] = s;
  }
}

void Simplex::update_binv(const std::vector<double>& alpha, int r) {
  double piv = alpha[r];
  double* rowr = &binv_[static_cast<std::size_t>(r) * m_];
  for (int k = 0; k < m_; ++k) rowr[k] /= piv;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double f = alpha[i];
    if (f == 0.0) continue;
    double* rowi = &binv_[static_cast<std::size_t>(i) * m_];
    for (int k = 0; k < m_; ++k) rowi[k] -= f * rowr[k];
  }
}

// Rebuilds binv_ for the given basis columns by pivoting them into an
// identity logical basis one at a time. Returns false on singularity.
bool Simplex::build_basis(std::vector<int> target) {
  binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
  basic_.resize(m_);
  std::vector<char> replace(m_, 1);
  std::vector<int> enter;
  for (int j : target) {
    if (j >= n_ && j < n_ + m_) {
      basic_[j - n_] = j;
      replace[j - n_] = 0;
    } else {
      enter.push_back(j);
    }
  }
  for (int i = 0; i < m_; ++i)
    if (replace[i]) basic_[i] = n_ + i;  // placeholder until replaced
  for (int j : enter) {
    ftran(j, alpha_);
    int r = -1;
    double best = kPivTol;
    for (int i = 0; i < m_; ++i) {
      if (!replace[i]) continue;
      double a = std::abs(alpha_[i]);
      if (a > best) {
        best = a;
        r = i;
      }
    }
    if (r < 0) return false;
    update_binv(alpha_, r);
    basic_[r] = j;
    replace[r] = 0;
  }
  for (int i = 0; i < m_; ++i)
    if (replace[i]) return false;  // short basis
  return true;
}

bool Simplex::try_warm() {
  if (!warm_) return false;
  if (static_cast<int>(warm_->basic_columns.size()) != m_) return false;
  std::vector<char> seen(n_ + m_, 0);
  for (int j : warm_->basic_columns) {
    if (j < 0 || j >= n_ + m_ || seen[j]) return false;
    seen[j] = 1;
  }
  stat_.assign(n_ + m_, VStat::AtLower);
  if (warm_->at_upper.size() == static_cast<std::size_t>(n_ + m_)) {
    for (int j = 0; j < n_ + m_; ++j)
      if (warm_->at_upper[j] && hi_[j] > lo_[j]) stat_[j] = VStat::AtUpper;
  }
  for (int j : warm_->basic_columns) stat_[j] = VStat::Basic;
  if (!build_basis(warm_->basic_columns)) return false;
  recompute_xb();
  double eps = feas_tol_ * bound_scale_;
  for (int i = 0; i < m_; ++i) {
    int j = basic_[i];
    if (xb_[i] < lo_[j] - eps || xb_[i] > hi_[j] + eps) return false;
  }
  return true;
}

void Simplex::cold_start() {
  stat_.assign(n_ + m_, VStat::AtLower);
  basic_.assign(m_, -1);
  xb_.assign(m_, 0.0);
  binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;

  std::vector<double> resid(rhs_);
  for (int j = 0; j < n_; ++j) {
    double v = lo_[j];
    if (v == 0.0) continue;
    const auto& rows = col_rows_[j];
    const auto& vals = col_vals_[j];
    for (std::size_t k = 0; k < rows.size(); ++k) resid[rows[k]] -= vals[k] * v;
  }

  for (int i = 0; i < m_; ++i) {
    int sj = n_ + i;
    double r = resid[i];
    if (r >= lo_[sj] && r <= hi_[sj]) {
      basic_[i] = sj;
      stat_[sj] = VStat::Basic;
      xb_[i] = r;
      continue;
    }
    double b = std::clamp(r, lo_[sj], hi_[sj]);
    stat_[sj] = (b == hi_[sj] && hi_[sj] > lo_[sj]) ? VStat::AtUpper : VStat::AtLower;
    double excess = r - b;
    double sigma = excess > 0 ? 1.0 : -1.0;
    col_rows_.push_back({i});
    col_vals_.push_back({sigma});
    lo_.push_back(0.0);
    hi_.push_back(std::abs(excess));
    stat_.push_back(VStat::Basic);
    basic_[i] = total_cols() - 1;
    xb_[i] = std::abs(excess);
    binv_[static_cast<std::size_t>(i) * m_ + i] = sigma;  // B^-1 = diag(sigma)
  }
}

int Simplex::pick_entering() const {
  int best = -1;
  double best_viol = opt_tol_;
  for (int j = 0; j < total_cols(); ++j) {
    if (stat_[j] == VStat::Basic || lo_[j] == hi_[j]) continue;
    double d = reduced_cost(j);
    double viol = stat_[j] == VStat::AtLower ? -d : d;
    if (viol <= opt_tol_) continue;
    if (bland_) return j;
    if (viol > best_viol) {
      best = j;
      best_viol = viol;
    }
  }
  return best;
}

bool Simplex::residuals_ok() const {
  double eps = feas_tol_ * rhs_scale_;
  std::vector<double> resid(rhs_);
  for (int j = 0; j < total_cols(); ++j) {
    double v = stat_[j] == VStat::Basic ? 0.0 : bound_value(j);
    if (v == 0.0) continue;
    const auto& rows = col_rows_[j];
    const auto& vals = col_vals_[j];
    for (std::size_t k = 0; k < rows.size(); ++k) resid[rows[k]] -= vals[k] * v;
  }
  for (int i = 0; i < m_; ++i) {
    int j = basic_[i];
    const auto& rows = col_rows_[j];
    const auto& vals = col_vals_[j];
    for (std::size_t k = 0; k < rows.size(); ++k)
      resid[rows[k]] -= vals[k] * xb_[i];
  }
  for (int i = 0; i < m_; ++i)
    if (std::abs(resid[i]) > eps) return false;
  double beps = feas_tol_ * bound_scale_;
  for (int i = 0; i < m_; ++i) {
    int j = basic_[i];
    if (xb_[i] < lo_[j] - beps || xb_[i] > hi_[j] + beps) return false;
  }
  return true;
}

Simplex::LoopOutcome Simplex::iterate() {
  bool priced_fresh = true;
  int polish = 0;
  while (true) {
    if (iterations_ >= max_iters_) return LoopOutcome::Limit;

    int q = pick_entering();
    if (q < 0) {
      if (!priced_fresh) {
        compute_duals();
        priced_fresh = true;
        continue;
      }
      if (phase1_) return LoopOutcome::Converged;
      if (residuals_ok()) return LoopOutcome::Converged;
      if (polish++ >= kPolishRounds) return LoopOutcome::Stall;
      if (!build_basis(basic_)) return LoopOutcome::Stall;
      recompute_xb();
      compute_duals();
      continue;
    }

    double d_q = reduced_cost(q);
    double t = stat_[q] == VStat::AtLower ? 1.0 : -1.0;
    double limit = hi_[q] - lo_[q];
    ftran(q, alpha_);

    double min_ratio = limit;
    for (int i = 0; i < m_; ++i) {
      double a = alpha_[i];
      if (std::abs(a) <= kPivTol) continue;
      double delta = -t * a;
      int bj = basic_[i];
      double r = delta > 0 ? (hi_[bj] - xb_[i]) / delta : (xb_[i] - lo_[bj]) / (-delta);
      if (r < 0) r = 0;
      if (r < min_ratio) min_ratio = r;
    }

    if (min_ratio >= limit) {
      // bound flip, no basis change
      double step = limit;
      for (int i = 0; i < m_; ++i) xb_[i] -= t * step * alpha_[i];
      stat_[q] = stat_[q] == VStat::AtLower ? VStat::AtUpper : VStat::AtLower;
      ++iterations_;
      if (step > kDegenStep) {
        degen_streak_ = 0;
        bland_ = false;
      } else if (++degen_streak_ > kBlandTrigger) {
        bland_ = true;
      }
      continue;
    }

    int leave = -1;
    bool leave_upper = false;
    double best_mag = 0.0;
    int best_col = std::numeric_limits<int>::max();
    for (int i = 0; i < m_; ++i) {
      double a = alpha_[i];
      if (std::abs(a) <= kPivTol) continue;
      double delta = -t * a;
      int bj = basic_[i];
      double r = delta > 0 ? (hi_[bj] - xb_[i]) / delta : (xb_[i] - lo_[bj]) / (-delta);
      if (r < 0) r = 0;
      if (r > min_ratio + kRatioTie) continue;
      bool take;
      if (bland_) {
        take = bj < best_col;
      } else {
        take = std::abs(a) > best_mag ||
               (std::abs(a) == best_mag && bj < best_col);
      }
      if (take) {
        leave = i;
        leave_upper = delta > 0;
        best_mag = std::abs(a);
        best_col = bj;
      }
    }

    double step = min_ratio;
    double xq = bound_value(q) + t * step;
    for (int i = 0; i < m_; ++i)
      if (i != leave) xb_[i] -= t * step * alpha_[i];

    // dual update from the pre-pivot inverse row
    row_copy_.assign(binv_.begin() + static_cast<std::size_t>(leave) * m_,
                     binv_.begin() + static_cast<std::size_t>(leave + 1) * m_);
    double gamma = d_q / alpha_[leave];
    for (int k = 0; k < m_; ++k) y_[k] += gamma * row_copy_[k];

    int old = basic_[leave];
    stat_[old] = leave_upper ? VStat::AtUpper : VStat::AtLower;
    basic_[leave] = q;
    stat_[q] = VStat::Basic;
    xb_[leave] = xq;
    update_binv(alpha_, leave);
    priced_fresh = false;

    ++iterations_;
    if (step > kDegenStep) {
      degen_streak_ = 0;
      bland_ = false;
    } else if (++degen_streak_ > kBlandTrigger) {
      bland_ = true;
    }

    if (iterations_ % kRefactorEvery == 0) {
      if (!build_basis(basic_)) return LoopOutcome::Stall;
      recompute_xb();
      compute_duals();
      priced_fresh = true;
    }
  }
}

double Simplex::artificial_total() const {
  double total = 0.0;
  for (int j = n_ + m_; j < total_cols(); ++j) {
    if (stat_[j] == VStat::AtUpper) total += hi_[j];
  }
  for (int i = 0; i < m_; ++i)
    if (is_artificial(basic_[i])) total += std::abs(xb_[i]);
  return total;
}

void Simplex::pivot_out_artificials() {
  for (int r = 0; r < m_; ++r) {
    if (!is_artificial(basic_[r])) continue;
    const double* brow = &binv_[static_cast<std::size_t>(r) * m_];
    int chosen = -1;
    for (int j = 0; j < n_ + m_; ++j) {
      if (stat_[j] == VStat::Basic) continue;
      const auto& rows = col_rows_[j];
      const auto& vals = col_vals_[j];
      double p = 0.0;
      for (std::size_t k = 0; k < rows.size(); ++k) p += brow[rows[k]] * vals[k];
      if (std::abs(p) > 1e-7) {
        chosen = j;
        break;
      }
    }
    if (chosen < 0) continue;  // redundant row, artificial stays pinned
    ftran(chosen, alpha_);
    int old = basic_[r];
    stat_[old] = VStat::AtLower;
    double xq = bound_value(chosen);
    basic_[r] = chosen;
    stat_[chosen] = VStat::Basic;
    xb_[r] = xq;
    update_binv(alpha_, r);
  }
}

void Simplex::pin_artificials() {
  for (int j = n_ + m_; j < total_cols(); ++j) {
    lo_[j] = 0.0;
    hi_[j] = 0.0;
    if (stat_[j] != VStat::Basic) stat_[j] = VStat::AtLower;
  }
}

LpSolution Simplex::make_solution(LpStatus status) const {
  LpSolution sol;
  sol.status = status;
  sol.iterations = iterations_;
  sol.y = y_;
  std::vector<double> value(total_cols());
  for (int j = 0; j < total_cols(); ++j)
    value[j] = stat_[j] == VStat::Basic ? 0.0 : bound_value(j);
  for (int i = 0; i < m_; ++i) value[basic_[i]] = xb_[i];
  sol.x.resize(n_);
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) {
    sol.x[j] = std::clamp(value[j], lo_[j], hi_[j]);
    obj += lp_.objective[j] * sol.x[j];
  }
  sol.value = obj;
  for (int i = 0; i < m_; ++i)
    if (!is_artificial(basic_[i])) sol.basis.basic_columns.push_back(basic_[i]);
  sol.basis.at_upper.assign(n_ + m_, 0);
  for (int j = 0; j < n_ + m_; ++j)
    if (stat_[j] == VStat::AtUpper) sol.basis.at_upper[j] = 1;
  return sol;
}

LpSolution Simplex::run() {
  if (!build_columns()) {
    LpSolution sol;
    sol.status = LpStatus::Infeasible;
    sol.x = lp_.lower;
    sol.y.assign(m_, 0.0);
    sol.value = 0.0;
    for (std::size_t j = 0; j < lp_.objective.size(); ++j)
      sol.value += lp_.objective[j] * sol.x[j];
    return sol;
  }

  y_.assign(m_, 0.0);
  alpha_.assign(m_, 0.0);
  xb_.assign(m_, 0.0);

  perturb_bounds();
  auto finish = [&](LpStatus status) {
    if (perturbed_) restore_bounds();
    return make_solution(status);
  };

  bool warm_ok = try_warm();
  if (!warm_ok) cold_start();
  phase1_ = total_cols() > n_ + m_;

  if (phase1_) {
    compute_duals();
    LoopOutcome oc = iterate();
    if (oc != LoopOutcome::Converged) return finish(LpStatus::IterationLimit);
    if (artificial_total() > feas_tol_ * rhs_scale_ * 10)
      return finish(LpStatus::Infeasible);
    pivot_out_artificials();
    pin_artificials();
    recompute_xb();
    phase1_ = false;
  }

  compute_duals();
  LoopOutcome oc = iterate();
  if (oc != LoopOutcome::Converged) return finish(LpStatus::IterationLimit);

  // the basis stays dual feasible with the true bounds, so this cleanup
  // pass usually accepts it without further pivots
  restore_bounds();
  recompute_xb();
  compute_duals();
  oc = iterate();
  if (oc != LoopOutcome::Converged) return finish(LpStatus::IterationLimit);
  return finish(LpStatus::Optimal);
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts,
                    const LpWarmStart* warm) {
  lp.validate();
  Simplex solver(lp, opts, warm);
  return solver.run();
}

}  // namespace ruleopt
