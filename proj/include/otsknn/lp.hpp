#pragma once

// Continuous linear programs and a bounded-variable revised simplex.
//
// Problems are stated as
//
//   minimize    c'x
//   subject to  a_i'x  (<=, =, >=)  b_i      for every constraint i
//               l_j <= x_j <= u_j            (either side may be infinite)
//
// Internally every constraint row gets a logical variable r_i = a_i'x whose
// bounds encode the relation, so the working system is [A  -I] (x, r) = 0.
// The basis inverse is kept dense and refreshed every `refactor_interval`
// pivots.  Phase 1 minimizes the sum of bound violations of the basic
// variables, which lets any basis (cold slack basis or a caller's warm hint)
// be used as a starting point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace otsknn {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
  std::string name;
};

class LinearProgram {
 public:
  int add_variable(double lower, double upper, double cost = 0.0, std::string name = {}) {
    lower_.push_back(lower);
    upper_.push_back(upper);
    cost_.push_back(cost);
    names_.push_back(std::move(name));
    return static_cast<int>(lower_.size()) - 1;
  }

  int add_constraint(std::vector<Term> terms, Relation rel, double rhs, std::string name = {}) {
    rows_.push_back({std::move(terms), rel, rhs, std::move(name)});
    return static_cast<int>(rows_.size()) - 1;
  }

  void set_bounds(int var, double lower, double upper) {
    lower_.at(var) = lower;
    upper_.at(var) = upper;
  }
  void set_cost(int var, double c) { cost_.at(var) = c; }

  int num_variables() const { return static_cast<int>(lower_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }
  double lower(int j) const { return lower_[j]; }
  double upper(int j) const { return upper_[j]; }
  double cost(int j) const { return cost_[j]; }
  const std::string& variable_name(int j) const { return names_[j]; }
  const Constraint& constraint(int i) const { return rows_[i]; }
  const std::vector<Constraint>& constraints() const { return rows_; }

  /// Well-formedness problems; empty when the program can be solved.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    for (int j = 0; j < num_variables(); ++j) {
      if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j])
        out.push_back("variable " + std::to_string(j) + " has lower bound above upper bound");
      if (!std::isfinite(cost_[j])) out.push_back("variable " + std::to_string(j) + " has non-finite cost");
    }
    for (int i = 0; i < num_constraints(); ++i) {
      if (!std::isfinite(rows_[i].rhs)) out.push_back("constraint " + std::to_string(i) + " has non-finite rhs");
      for (const auto& t : rows_[i].terms) {
        if (t.var < 0 || t.var >= num_variables())
          out.push_back("constraint " + std::to_string(i) + " references invalid variable " + std::to_string(t.var));
        else if (!std::isfinite(t.coef))
          out.push_back("constraint " + std::to_string(i) + " has non-finite coefficient");
      }
    }
    return out;
  }

 private:
  std::vector<double> lower_, upper_, cost_;
  std::vector<std::string> names_;
  std::vector<Constraint> rows_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "?";
}

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, AtZero };

/// Status of every structural variable followed by every row logical.
struct Basis {
  std::vector<VarStatus> status;
};

struct LpConfig {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-7;
  double pivot_tol = 1e-9;
  long max_iterations = 200000;
  int refactor_interval = 100;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int stall_threshold = 50;
};

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  double objective = 0.0;
  std::vector<double> primal;
  std::vector<double> dual;  // shadow price per constraint, when optimal
  Basis basis;
  long iterations = 0;
  bool warm_started = false;
  int warm_start_fallbacks = 0;
};

namespace detail {

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpConfig& cfg) : cfg_(cfg) {
    n_ = lp.num_variables();
    m_ = lp.num_constraints();
    const int total = n_ + m_;
    lo_.resize(total);
    up_.resize(total);
    cost_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp.lower(j);
      up_[j] = lp.upper(j);
      cost_[j] = lp.cost(j);
    }
    // Column-compressed structural matrix.  Duplicate entries are summed.
    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    for (int i = 0; i < m_; ++i) {
      const auto& row = lp.constraint(i);
      for (const auto& t : row.terms) {
        if (t.coef == 0.0) continue;
        auto& col = cols[t.var];
        if (!col.empty() && col.back().first == i)
          col.back().second += t.coef;
        else
          col.emplace_back(i, t.coef);
      }
      switch (row.relation) {
        case Relation::LessEqual: lo_[n_ + i] = -kInfinity; up_[n_ + i] = row.rhs; break;
        case Relation::GreaterEqual: lo_[n_ + i] = row.rhs; up_[n_ + i] = kInfinity; break;
        case Relation::Equal: lo_[n_ + i] = row.rhs; up_[n_ + i] = row.rhs; break;
      }
    }
    col_start_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + static_cast<int>(cols[j].size());
    col_row_.reserve(col_start_[n_]);
    col_val_.reserve(col_start_[n_]);
    for (int j = 0; j < n_; ++j)
      for (auto [r, v] : cols[j]) {
        col_row_.push_back(r);
        col_val_.push_back(v);
      }
  }

  void cold_start() {
    const int total = n_ + m_;
    status_.assign(total, VarStatus::AtLower);
    x_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) status_[j] = nonbasic_status_for(j, VarStatus::AtLower);
    head_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      status_[n_ + i] = VarStatus::Basic;
      head_[i] = n_ + i;
    }
    place_nonbasic();
  }

  /// Returns false (and leaves the solver cold-started) when the hint does not
  /// fit this program.
  bool warm_start(const Basis& hint) {
    const int total = n_ + m_;
    if (static_cast<int>(hint.status.size()) != total) {
      cold_start();
      return false;
    }
    int basic = 0;
    for (auto s : hint.status) basic += s == VarStatus::Basic;
    if (basic != m_) {
      cold_start();
      return false;
    }
    status_ = hint.status;
    x_.assign(total, 0.0);
    head_.clear();
    for (int j = 0; j < total; ++j) {
      if (status_[j] == VarStatus::Basic)
        head_.push_back(j);
      else
        status_[j] = nonbasic_status_for(j, status_[j]);
    }
    place_nonbasic();
    return true;
  }

  LpSolution run() {
    LpSolution sol;
    iterations_ = 0;
    refactor();
    int verify_rounds = 0;
    bool bland = false;
    int stall = 0;
    int since_refactor = 0;
    int last_phase = 0;
    while (true) {
      if (iterations_ >= cfg_.max_iterations) {
        sol.status = LpStatus::IterationLimit;
        break;
      }
      if (since_refactor >= cfg_.refactor_interval) {
        refactor();
        since_refactor = 0;
      }
      const double infeas = basic_infeasibility();
      const int phase = infeas > cfg_.feasibility_tol ? 1 : 2;
      if (phase != last_phase) {
        bland = false;
        stall = 0;
        last_phase = phase;
      }
      compute_duals(phase);
      int enter = -1;
      int dir = 0;
      price(phase, bland, enter, dir);
      if (enter < 0) {
        // Confirm with a fresh factorization before concluding.
        if (since_refactor > 0 && verify_rounds < 3) {
          refactor();
          since_refactor = 0;
          ++verify_rounds;
          continue;
        }
        sol.status = phase == 1 ? LpStatus::Infeasible : LpStatus::Optimal;
        break;
      }
      ftran(enter);
      double step = 0.0;
      int leave_pos = -1;
      bool leave_at_upper = false;
      ratio_test(phase, bland, enter, dir, step, leave_pos, leave_at_upper);
      if (std::isinf(step)) {
        if (phase == 2) {
          sol.status = LpStatus::Unbounded;
          break;
        }
        // Phase 1 should always be blocked; treat as numerical trouble.
        refactor();
        since_refactor = 0;
        if (++verify_rounds > 5) {
          sol.status = LpStatus::IterationLimit;
          break;
        }
        continue;
      }
      ++iterations_;
      apply_step(enter, dir, step);
      if (leave_pos < 0) {
        // Entering variable moves to its opposite bound.
        status_[enter] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
        x_[enter] = dir > 0 ? up_[enter] : lo_[enter];
      } else {
        const int leaving = head_[leave_pos];
        status_[leaving] = leave_at_upper ? VarStatus::AtUpper : VarStatus::AtLower;
        x_[leaving] = leave_at_upper ? up_[leaving] : lo_[leaving];
        pivot(leave_pos, enter);
        ++since_refactor;
      }
      if (step <= 1e-12) {
        if (++stall > cfg_.stall_threshold) bland = true;
      } else {
        stall = 0;
        bland = false;
      }
    }
    sol.iterations = iterations_;
    sol.primal.assign(x_.begin(), x_.begin() + n_);
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += cost_[j] * x_[j];
    sol.objective = obj;
    if (sol.status == LpStatus::Optimal) {
      compute_duals(2);
      sol.dual = y_;
    }
    sol.basis.status = status_;
    return sol;
  }

 private:
  VarStatus nonbasic_status_for(int j, VarStatus wanted) const {
    const bool has_lo = std::isfinite(lo_[j]);
    const bool has_up = std::isfinite(up_[j]);
    if (wanted == VarStatus::AtUpper && has_up) return VarStatus::AtUpper;
    if (wanted == VarStatus::AtLower && has_lo) return VarStatus::AtLower;
    if (has_lo) return VarStatus::AtLower;
    if (has_up) return VarStatus::AtUpper;
    return VarStatus::AtZero;
  }

  void place_nonbasic() {
    for (int j = 0; j < n_ + m_; ++j) {
      switch (status_[j]) {
        case VarStatus::AtLower: x_[j] = lo_[j]; break;
        case VarStatus::AtUpper: x_[j] = up_[j]; break;
        case VarStatus::AtZero: x_[j] = 0.0; break;
        case VarStatus::Basic: break;
      }
    }
  }

  // y' a_j for column j of [A -I].
  double dot_column(int j, const std::vector<double>& y) const {
    if (j >= n_) return -y[j - n_];
    double s = 0.0;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) s += y[col_row_[k]] * col_val_[k];
    return s;
  }

  /// alpha = B^{-1} a_j.
  void ftran(int j) {
    alpha_.assign(m_, 0.0);
    if (j >= n_) {
      const int r = j - n_;
      for (int i = 0; i < m_; ++i) alpha_[i] = -binv_[static_cast<std::size_t>(i) * m_ + r];
      return;
    }
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
      const int r = col_row_[k];
      const double v = col_val_[k];
      for (int i = 0; i < m_; ++i) alpha_[i] += binv_[static_cast<std::size_t>(i) * m_ + r] * v;
    }
  }

  void pivot(int r, int enter) {
    const double piv = alpha_[r];
    const std::size_t M = static_cast<std::size_t>(m_);
    double* prow = &binv_[r * M];
    for (std::size_t c = 0; c < M; ++c) prow[c] /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = alpha_[i];
      if (f == 0.0) continue;
      double* row = &binv_[i * M];
      for (std::size_t c = 0; c < M; ++c) row[c] -= f * prow[c];
    }
    head_[r] = enter;
    status_[enter] = VarStatus::Basic;
  }

  /// Rebuilds B^{-1} from the slack basis by pivoting the basic structural
  /// columns in one at a time.  Columns that turn out dependent are made
  /// nonbasic and their slot keeps its logical.
  void refactor() {
    const std::size_t M = static_cast<std::size_t>(m_);
    binv_.assign(M * M, 0.0);
    for (std::size_t i = 0; i < M; ++i) binv_[i * M + i] = -1.0;
    head_.resize(m_);
    for (int i = 0; i < m_; ++i) head_[i] = n_ + i;
    std::vector<bool> slot_free(m_, true);
    std::vector<bool> logical_wanted(m_, false);
    for (int i = 0; i < m_; ++i) logical_wanted[i] = status_[n_ + i] == VarStatus::Basic;

    for (int j = 0; j < n_; ++j) {
      if (status_[j] != VarStatus::Basic) continue;
      ftran(j);
      int best_any = -1, best_pref = -1;
      double abs_any = 0.0, abs_pref = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (!slot_free[i]) continue;
        const double a = std::abs(alpha_[i]);
        if (a > abs_any) {
          abs_any = a;
          best_any = i;
        }
        if (!logical_wanted[i] && a > abs_pref) {
          abs_pref = a;
          best_pref = i;
        }
      }
      if (best_any < 0 || abs_any < 1e-9) {
        status_[j] = nonbasic_status_for(j, nearest_bound(j));
        continue;
      }
      const int slot = (best_pref >= 0 && abs_pref >= 1e-2 * abs_any) ? best_pref : best_any;
      pivot(slot, j);
      slot_free[slot] = false;
    }
    for (int i = 0; i < m_; ++i) {
      const int lj = n_ + i;
      status_[lj] = slot_free[i] ? VarStatus::Basic : nonbasic_status_for(lj, nearest_bound(lj));
    }
    place_nonbasic();
    recompute_basic_values();
  }

  VarStatus nearest_bound(int j) const {
    if (!std::isfinite(up_[j])) return VarStatus::AtLower;
    if (!std::isfinite(lo_[j])) return VarStatus::AtUpper;
    return std::abs(x_[j] - up_[j]) < std::abs(x_[j] - lo_[j]) ? VarStatus::AtUpper : VarStatus::AtLower;
  }

  void recompute_basic_values() {
    // B x_B = -N x_N
    std::vector<double> rhs(m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (status_[j] == VarStatus::Basic || x_[j] == 0.0) continue;
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) rhs[col_row_[k]] -= col_val_[k] * x_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int lj = n_ + i;
      if (status_[lj] != VarStatus::Basic) rhs[i] += x_[lj];
    }
    const std::size_t M = static_cast<std::size_t>(m_);
    for (int i = 0; i < m_; ++i) {
      double s = 0.0;
      const double* row = &binv_[i * M];
      for (int c = 0; c < m_; ++c) s += row[c] * rhs[c];
      x_[head_[i]] = s;
    }
  }

  double basic_infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      if (x_[j] < lo_[j] - cfg_.feasibility_tol) s += lo_[j] - x_[j];
      else if (x_[j] > up_[j] + cfg_.feasibility_tol) s += x_[j] - up_[j];
    }
    return s;
  }

  double phase_cost(int phase, int j) const {
    if (phase == 2) return cost_[j];
    if (status_[j] != VarStatus::Basic) return 0.0;
    if (x_[j] < lo_[j] - cfg_.feasibility_tol) return -1.0;
    if (x_[j] > up_[j] + cfg_.feasibility_tol) return 1.0;
    return 0.0;
  }

  void compute_duals(int phase) {
    const std::size_t M = static_cast<std::size_t>(m_);
    y_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double cb = phase_cost(phase, head_[i]);
      if (cb == 0.0) continue;
      const double* row = &binv_[i * M];
      for (int c = 0; c < m_; ++c) y_[c] += cb * row[c];
    }
  }

  void price(int phase, bool bland, int& enter, int& dir) const {
    double best = 0.0;
    enter = -1;
    dir = 0;
    for (int j = 0; j < n_ + m_; ++j) {
      const VarStatus s = status_[j];
      if (s == VarStatus::Basic) continue;
      if (lo_[j] == up_[j]) continue;
      const double d = phase_cost(phase, j) - dot_column(j, y_);
      int cand_dir = 0;
      if (d < -cfg_.optimality_tol && (s == VarStatus::AtLower || s == VarStatus::AtZero)) cand_dir = 1;
      else if (d > cfg_.optimality_tol && (s == VarStatus::AtUpper || s == VarStatus::AtZero)) cand_dir = -1;
      if (cand_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = cand_dir;
        return;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        enter = j;
        dir = cand_dir;
      }
    }
  }

  struct Block {
    double exact = kInfinity;
    double relaxed = kInfinity;
    bool at_upper = false;
  };

  // How far the entering variable can move before basic slot i blocks.
  Block block_for(int phase, int i, int dir) const {
    Block b;
    const double a = alpha_[i];
    if (std::abs(a) <= cfg_.pivot_tol) return b;
    const int j = head_[i];
    const double rate = -dir * a;  // d x_j / d step
    const double xj = x_[j];
    const double ftol = cfg_.feasibility_tol;
    if (rate > 0) {
      if (phase == 1 && xj < lo_[j] - ftol) {
        b.exact = b.relaxed = (lo_[j] - xj) / rate;
      } else if (phase == 1 && xj > up_[j] + ftol) {
        return b;
      } else if (std::isfinite(up_[j])) {
        b.exact = std::max(0.0, (up_[j] - xj) / rate);
        b.relaxed = (up_[j] + ftol - xj) / rate;
        b.at_upper = true;
      }
    } else {
      if (phase == 1 && xj > up_[j] + ftol) {
        b.exact = b.relaxed = (xj - up_[j]) / -rate;
        b.at_upper = true;
      } else if (phase == 1 && xj < lo_[j] - ftol) {
        return b;
      } else if (std::isfinite(lo_[j])) {
        b.exact = std::max(0.0, (xj - lo_[j]) / -rate);
        b.relaxed = (xj - lo_[j] + ftol) / -rate;
      }
    }
    return b;
  }

  void ratio_test(int phase, bool bland, int enter, int dir, double& step, int& leave_pos, bool& leave_at_upper) const {
    leave_pos = -1;
    leave_at_upper = false;
    const double flip = (std::isfinite(lo_[enter]) && std::isfinite(up_[enter])) ? up_[enter] - lo_[enter] : kInfinity;
    step = kInfinity;
    if (bland) {
      for (int i = 0; i < m_; ++i) {
        const Block b = block_for(phase, i, dir);
        if (!std::isfinite(b.exact)) continue;
        if (b.exact < step - 1e-12 || (b.exact <= step + 1e-12 && leave_pos >= 0 && head_[i] < head_[leave_pos])) {
          step = b.exact;
          leave_pos = i;
          leave_at_upper = b.at_upper;
        }
      }
    } else {
      // Harris two-pass: largest pivot among rows blocking within the relaxed step.
      double relaxed_min = kInfinity;
      for (int i = 0; i < m_; ++i) relaxed_min = std::min(relaxed_min, block_for(phase, i, dir).relaxed);
      if (std::isfinite(relaxed_min)) {
        double best_pivot = -1.0;
        for (int i = 0; i < m_; ++i) {
          const Block b = block_for(phase, i, dir);
          if (!(b.exact <= relaxed_min)) continue;
          if (std::abs(alpha_[i]) > best_pivot) {
            best_pivot = std::abs(alpha_[i]);
            step = b.exact;
            leave_pos = i;
            leave_at_upper = b.at_upper;
          }
        }
      }
    }
    if (flip <= step) {
      step = flip;
      leave_pos = -1;
    }
  }

  void apply_step(int enter, int dir, double step) {
    if (step == 0.0) return;
    x_[enter] += dir * step;
    for (int i = 0; i < m_; ++i)
      if (alpha_[i] != 0.0) x_[head_[i]] -= dir * alpha_[i] * step;
  }

  LpConfig cfg_;
  int n_ = 0, m_ = 0;
  std::vector<double> lo_, up_, cost_;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<VarStatus> status_;
  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<double> binv_;
  std::vector<double> y_;
  std::vector<double> alpha_;
  long iterations_ = 0;
};

inline void require_well_formed(const LinearProgram& lp) {
  auto issues = lp.problems();
  if (!issues.empty()) throw std::invalid_argument("malformed linear program: " + issues.front());
}

}  // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp, const LpConfig& config = {}) {
  detail::require_well_formed(lp);
  detail::Simplex s(lp, config);
  s.cold_start();
  return s.run();
}

/// Same contract as solve_lp; the hint only changes where the search starts.
/// An incompatible hint falls back to a cold start and is counted in
/// `warm_start_fallbacks`.
inline LpSolution solve_lp_warm(const LinearProgram& lp, const Basis& hint, const LpConfig& config = {}) {
  detail::require_well_formed(lp);
  detail::Simplex s(lp, config);
  const bool ok = s.warm_start(hint);
  auto sol = s.run();
  sol.warm_started = ok;
  sol.warm_start_fallbacks = ok ? 0 : 1;
  return sol;
}

}  // namespace otsknn
