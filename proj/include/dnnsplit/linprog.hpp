#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dnnsplit/errors.hpp"

// Sparse-input LP/ILP solver: bounded-variable primal simplex on a dense
// tableau (two phases, Dantzig pricing with a switch to Bland's rule on
// degeneracy streaks) and best-first branch-and-bound on top of it.

namespace dnnsplit::lp {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class Relation : std::uint8_t { less_equal, equal, greater_equal };

struct Term {
  std::uint32_t col = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Relation rel = Relation::less_equal;
  double rhs = 0.0;
};

// minimize cost . x  subject to rows and lower <= x <= upper.
struct LinearProgram {
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<char> integral;
  std::vector<Constraint> rows;

  std::uint32_t add_column(double c, double lo, double hi, bool is_integral = false) {
    cost.push_back(c);
    lower.push_back(lo);
    upper.push_back(hi);
    integral.push_back(is_integral ? 1 : 0);
    return static_cast<std::uint32_t>(cost.size() - 1);
  }

  void add_row(std::vector<Term> terms, Relation rel, double rhs) {
    rows.push_back(Constraint{std::move(terms), rel, rhs});
  }

  std::size_t num_cols() const { return cost.size(); }
  std::size_t num_rows() const { return rows.size(); }

  void validate() const {
    auto n = cost.size();
    if (lower.size() != n || upper.size() != n || integral.size() != n)
      throw InvalidProgram("column vectors have inconsistent lengths");
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(cost[j])) throw InvalidProgram("non-finite cost");
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
        throw InvalidProgram("invalid bounds");
      if (lower[j] == inf || upper[j] == -inf) throw InvalidProgram("empty bound range");
    }
    for (const auto& r : rows) {
      if (!std::isfinite(r.rhs)) throw InvalidProgram("non-finite rhs");
      for (const auto& t : r.terms) {
        if (t.col >= n) throw InvalidProgram("row references unknown column");
        if (!std::isfinite(t.coef)) throw InvalidProgram("non-finite coefficient");
      }
    }
  }

  double objective(std::span<const double> x) const {
    double z = 0.0;
    for (std::size_t j = 0; j < cost.size(); ++j) z += cost[j] * x[j];
    return z;
  }

  // Largest absolute violation of any row or bound.
  double max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < cost.size(); ++j) {
      worst = std::max(worst, lower[j] - x[j]);
      worst = std::max(worst, x[j] - upper[j]);
    }
    for (const auto& r : rows) {
      double lhs = 0.0;
      for (const auto& t : r.terms) lhs += t.coef * x[t.col];
      switch (r.rel) {
        case Relation::less_equal: worst = std::max(worst, lhs - r.rhs); break;
        case Relation::greater_equal: worst = std::max(worst, r.rhs - lhs); break;
        case Relation::equal: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
      }
    }
    return worst;
  }
};

enum class Status : std::uint8_t { optimal, infeasible, unbounded, iteration_limit, time_limit, node_limit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    case Status::time_limit: return "time_limit";
    case Status::node_limit: return "node_limit";
  }
  return "?";
}

struct LpSolution {
  Status status = Status::infeasible;
  double objective = inf;
  std::vector<double> x;
  std::size_t iterations = 0;
  // Original columns that are basic in the final basis.
  std::vector<std::uint32_t> basis;
  // Branch-and-bound bookkeeping (zero for plain LP solves).
  std::size_t nodes = 0;
  std::size_t branches = 0;
  double best_bound = -inf;

  bool has_solution() const { return !x.empty(); }
};

using Clock = std::chrono::steady_clock;

struct SimplexOptions {
  std::size_t max_pivots = 1'000'000;
  std::size_t bland_after = 50;  // degenerate pivots in a row before Bland's rule
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
  std::optional<Clock::time_point> deadline;
};

namespace detail {

class BoundedSimplex {
 public:
  BoundedSimplex(const LinearProgram& lp, std::span<const double> lower, std::span<const double> upper,
                 const SimplexOptions& opt)
      : lp_(&lp), lo_(lower.begin(), lower.end()), hi_(upper.begin(), upper.end()), opt_(opt) {}

  LpSolution solve() {
    LpSolution sol;
    if (!setup(sol)) return sol;

    if (n_art_ > 0) {
      std::vector<double> phase1(n_total_, 0.0);
      for (std::size_t j = art_begin_; j < n_total_; ++j) phase1[j] = 1.0;
      set_cost(phase1);
      auto st = iterate(sol);
      if (st != Status::optimal) {
        sol.status = st == Status::unbounded ? Status::infeasible : st;
        return sol;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        if (basic_[i] >= art_begin_ && beta_[i] > opt_.feasibility_tol * (1.0 + std::abs(rhs_[i]))) {
          sol.status = Status::infeasible;
          return sol;
        }
      }
      for (std::size_t j = art_begin_; j < n_total_; ++j) ub_[j] = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (basic_[i] >= art_begin_) beta_[i] = 0.0;
      drive_out_artificials();
    }

    set_cost(cost_int_);
    auto st = iterate(sol);
    sol.status = st;
    if (st == Status::optimal) extract(sol);
    return sol;
  }

  // Re-optimizes an optimal instance after the original bounds change to
  // [lower, upper] (dual simplex from the current basis). Returns nullopt
  // when a warm start does not apply; the caller then solves from scratch.
  std::optional<LpSolution> resolve(std::span<const double> lower, std::span<const double> upper) {
    LpSolution sol;
    for (std::size_t j = 0; j < lp_->num_cols(); ++j) {
      const auto& mp = map_[j];
      if (mp.b >= 0) {
        if (lower[j] != lo_[j] || upper[j] != hi_[j]) return std::nullopt;
        continue;
      }
      if (mp.a < 0) {
        if (lower[j] != lo_[j] || upper[j] != hi_[j]) return std::nullopt;
        continue;
      }
      double nl = mp.sign > 0 ? lower[j] - mp.offset : mp.offset - upper[j];
      double nu = mp.sign > 0 ? upper[j] - mp.offset : mp.offset - lower[j];
      if (nl > nu) {
        sol.status = Status::infeasible;
        return sol;
      }
      if (!std::isfinite(nl)) return std::nullopt;
      if (!set_bounds(static_cast<std::size_t>(mp.a), nl, nu)) return std::nullopt;
    }
    lo_.assign(lower.begin(), lower.end());
    hi_.assign(upper.begin(), upper.end());
    auto st = dual_iterate(sol);
    if (st == Status::optimal) st = iterate(sol);
    sol.status = st;
    if (st == Status::optimal) extract(sol);
    return sol;
  }

 private:
  struct Mapping {
    std::int64_t a = -1;  // internal column
    std::int64_t b = -1;  // second column for free variables
    double offset = 0.0;
    double sign = 1.0;
  };

  bool setup(LpSolution& sol) {
    const auto n = lp_->num_cols();
    map_.assign(n, {});
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double lo = lo_[j], hi = hi_[j];
      auto& mp = map_[j];
      if (lo == hi) {
        mp.offset = lo;
      } else if (std::isfinite(lo)) {
        mp.a = static_cast<std::int64_t>(k++);
        mp.offset = lo;
        col_ub_.push_back(hi - lo);
      } else if (std::isfinite(hi)) {
        mp.a = static_cast<std::int64_t>(k++);
        mp.offset = hi;
        mp.sign = -1.0;
        col_ub_.push_back(inf);
      } else {
        mp.a = static_cast<std::int64_t>(k++);
        mp.b = static_cast<std::int64_t>(k++);
        col_ub_.push_back(inf);
        col_ub_.push_back(inf);
      }
    }
    n_struct_ = k;

    // Internal sparse rows.
    struct SRow {
      std::vector<std::pair<std::size_t, double>> coefs;
      Relation rel;
      double rhs;
    };
    std::vector<SRow> rows;
    std::vector<double> dense(n_struct_, 0.0);
    std::vector<std::size_t> touched;
    for (const auto& r : lp_->rows) {
      double rhs = r.rhs;
      touched.clear();
      for (const auto& t : r.terms) {
        const auto& mp = map_[t.col];
        rhs -= t.coef * mp.offset;
        if (mp.a >= 0) {
          auto a = static_cast<std::size_t>(mp.a);
          if (dense[a] == 0.0) touched.push_back(a);
          dense[a] += t.coef * mp.sign;
          if (dense[a] == 0.0) dense[a] = 1e-300;  // keep slot registered
        }
        if (mp.b >= 0) {
          auto b = static_cast<std::size_t>(mp.b);
          if (dense[b] == 0.0) touched.push_back(b);
          dense[b] -= t.coef;
          if (dense[b] == 0.0) dense[b] = 1e-300;
        }
      }
      SRow sr{{}, r.rel, rhs};
      std::sort(touched.begin(), touched.end());
      for (auto c : touched) {
        if (std::abs(dense[c]) > 1e-200) sr.coefs.emplace_back(c, dense[c]);
        dense[c] = 0.0;
      }
      if (sr.coefs.empty()) {
        bool ok = true;
        double tol = opt_.feasibility_tol * (1.0 + std::abs(r.rhs));
        switch (sr.rel) {
          case Relation::less_equal: ok = 0.0 <= rhs + tol; break;
          case Relation::greater_equal: ok = 0.0 >= rhs - tol; break;
          case Relation::equal: ok = std::abs(rhs) <= tol; break;
        }
        if (!ok) {
          sol.status = Status::infeasible;
          return false;
        }
        continue;
      }
      rows.push_back(std::move(sr));
    }

    m_ = rows.size();
    std::size_t n_slack = 0;
    for (const auto& r : rows)
      if (r.rel != Relation::equal) ++n_slack;
    slack_begin_ = n_struct_;
    // Decide which rows need an artificial.
    std::vector<double> sign(m_, 1.0);
    std::vector<std::int64_t> slack_of(m_, -1);
    std::size_t s = 0;
    n_art_ = 0;
    std::vector<char> needs_art(m_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      double slack_coef = 0.0;
      if (rows[i].rel != Relation::equal) {
        slack_of[i] = static_cast<std::int64_t>(slack_begin_ + s++);
        slack_coef = rows[i].rel == Relation::less_equal ? 1.0 : -1.0;
      }
      if (rows[i].rhs < 0.0) sign[i] = -1.0;
      if (!(slack_coef * sign[i] > 0.0)) {
        needs_art[i] = 1;
        ++n_art_;
      }
    }
    art_begin_ = slack_begin_ + n_slack;
    n_total_ = art_begin_ + n_art_;

    T_.assign(m_ * n_total_, 0.0);
    beta_.assign(m_, 0.0);
    rhs_.assign(m_, 0.0);
    basic_.assign(m_, 0);
    pos_.assign(n_total_, -1);
    at_upper_.assign(n_total_, 0);
    ub_.assign(n_total_, inf);
    lb_.assign(n_total_, 0.0);
    for (std::size_t j = 0; j < n_struct_; ++j) ub_[j] = col_ub_[j];

    std::size_t a = art_begin_;
    for (std::size_t i = 0; i < m_; ++i) {
      double* row = &T_[i * n_total_];
      for (auto [c, v] : rows[i].coefs) row[c] = sign[i] * v;
      if (slack_of[i] >= 0)
        row[slack_of[i]] = sign[i] * (rows[i].rel == Relation::less_equal ? 1.0 : -1.0);
      rhs_[i] = sign[i] * rows[i].rhs;
      beta_[i] = rhs_[i];
      std::size_t b;
      if (needs_art[i]) {
        b = a++;
        row[b] = 1.0;
      } else {
        b = static_cast<std::size_t>(slack_of[i]);
      }
      basic_[i] = b;
      pos_[b] = static_cast<std::int64_t>(i);
    }

    cost_int_.assign(n_total_, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& mp = map_[j];
      if (mp.a >= 0) cost_int_[mp.a] += lp_->cost[j] * mp.sign;
      if (mp.b >= 0) cost_int_[mp.b] -= lp_->cost[j];
    }
    nz_.reserve(n_total_);
    return true;
  }

  void set_cost(const std::vector<double>& c) {
    cost_ = c;
    d_ = c;
    for (std::size_t i = 0; i < m_; ++i) {
      double cb = cost_[basic_[i]];
      if (cb == 0.0) continue;
      const double* row = &T_[i * n_total_];
      for (std::size_t j = 0; j < n_total_; ++j)
        if (row[j] != 0.0) d_[j] -= cb * row[j];
    }
    for (std::size_t i = 0; i < m_; ++i) d_[basic_[i]] = 0.0;
  }

  double value_of_nonbasic(std::size_t j) const { return at_upper_[j] ? ub_[j] : lb_[j]; }
  bool is_fixed(std::size_t j) const { return ub_[j] == lb_[j]; }

  void pivot(std::size_t p, std::size_t q) {
    double* prow = &T_[p * n_total_];
    const double piv = prow[q];
    nz_.clear();
    for (std::size_t k = 0; k < n_total_; ++k)
      if (prow[k] != 0.0) {
        prow[k] /= piv;
        nz_.push_back(k);
      }
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == p) continue;
      double* row = &T_[i * n_total_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (auto k : nz_) {
        double v = row[k] - f * prow[k];
        row[k] = std::abs(v) < 1e-13 ? 0.0 : v;
      }
      row[q] = 0.0;
    }
    const double f = d_[q];
    if (f != 0.0)
      for (auto k : nz_) d_[k] -= f * prow[k];
    d_[q] = 0.0;
    auto leaving = basic_[p];
    pos_[leaving] = -1;
    basic_[p] = q;
    pos_[q] = static_cast<std::int64_t>(p);
  }

  Status iterate(LpSolution& sol) {
    std::size_t degenerate_streak = 0;
    while (true) {
      if (sol.iterations >= opt_.max_pivots) return Status::iteration_limit;
      if (opt_.deadline && (sol.iterations & 63) == 0 && Clock::now() > *opt_.deadline)
        return Status::time_limit;
      const bool bland = degenerate_streak >= opt_.bland_after;

      // Pricing.
      std::int64_t q = -1;
      double best = 0.0;
      for (std::size_t j = 0; j < n_total_; ++j) {
        if (pos_[j] >= 0 || is_fixed(j)) continue;
        double dj = d_[j];
        double score = at_upper_[j] ? dj : -dj;
        if (score > opt_.optimality_tol) {
          if (bland) {
            q = static_cast<std::int64_t>(j);
            break;
          }
          if (score > best) {
            best = score;
            q = static_cast<std::int64_t>(j);
          }
        }
      }
      if (q < 0) return Status::optimal;
      const auto qc = static_cast<std::size_t>(q);
      const double dir = at_upper_[qc] ? -1.0 : 1.0;

      // Ratio test.
      double t_best = ub_[qc] - lb_[qc];
      std::int64_t p = -1;
      double p_alpha = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = T_[i * n_total_ + qc];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const double delta = a * dir;  // basic var moves by -delta * t
        const std::size_t b = basic_[i];
        double t;
        if (delta > 0.0) {
          t = std::max(beta_[i] - lb_[b], 0.0) / delta;
        } else {
          if (ub_[b] == inf) continue;
          t = std::max(ub_[b] - beta_[i], 0.0) / (-delta);
        }
        bool take = false;
        if (p < 0 && t < t_best) {
          take = true;
        } else if (p >= 0) {
          if (t < t_best - 1e-12) {
            take = true;
          } else if (t <= t_best + 1e-12) {
            if (bland)
              take = b < basic_[static_cast<std::size_t>(p)];
            else
              take = std::abs(a) > std::abs(p_alpha);
          }
        } else if (t <= t_best && std::isfinite(t_best) && t < t_best + 1e-12) {
          // Tie with the entering variable's own bound: prefer the basis change.
          take = t < t_best;
        }
        if (take) {
          t_best = t;
          p = static_cast<std::int64_t>(i);
          p_alpha = a;
        }
      }
      if (p < 0 && t_best == inf) return Status::unbounded;
      ++sol.iterations;

      const double step = t_best;
      if (step <= 1e-12)
        ++degenerate_streak;
      else
        degenerate_streak = 0;

      if (step > 0.0)
        for (std::size_t i = 0; i < m_; ++i) {
          const double a = T_[i * n_total_ + qc];
          if (a != 0.0) beta_[i] -= a * dir * step;
        }

      if (p < 0) {
        // Bound flip.
        at_upper_[qc] = at_upper_[qc] ? 0 : 1;
        continue;
      }
      const auto pr = static_cast<std::size_t>(p);
      const std::size_t leaving = basic_[pr];
      const double entering_value = value_of_nonbasic(qc) + dir * step;
      const double delta = p_alpha * dir;
      at_upper_[leaving] = delta > 0.0 ? 0 : 1;
      at_upper_[qc] = 0;
      pivot(pr, qc);
      beta_[pr] = entering_value;
    }
  }

  // Moves a structural column to new internal bounds, placing a nonbasic
  // column on the side its reduced cost prefers. False if no side is dual
  // feasible.
  bool set_bounds(std::size_t k, double nl, double nu) {
    if (pos_[k] >= 0) {
      lb_[k] = nl;
      ub_[k] = nu;
      return true;
    }
    const double old = value_of_nonbasic(k);
    lb_[k] = nl;
    ub_[k] = nu;
    if (!is_fixed(k)) {
      if (d_[k] < 0.0 && std::isfinite(nu))
        at_upper_[k] = 1;
      else if (d_[k] > 0.0)
        at_upper_[k] = 0;
      if (at_upper_[k] && !std::isfinite(nu)) at_upper_[k] = 0;
      if (!at_upper_[k] && d_[k] < -1e-9) return false;
    }
    const double delta = value_of_nonbasic(k) - old;
    if (delta != 0.0)
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = T_[i * n_total_ + k];
        if (a != 0.0) beta_[i] -= a * delta;
      }
    return true;
  }

  // Bounded dual simplex; requires a dual-feasible basis.
  Status dual_iterate(LpSolution& sol) {
    std::size_t degenerate_streak = 0;
    while (true) {
      if (sol.iterations >= opt_.max_pivots) return Status::iteration_limit;
      if (opt_.deadline && (sol.iterations & 63) == 0 && Clock::now() > *opt_.deadline)
        return Status::time_limit;
      const bool bland = degenerate_streak >= opt_.bland_after;

      std::int64_t r = -1;
      double worst = 0.0;
      bool below = false;
      for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t b = basic_[i];
        double viol = 0.0;
        bool lo_side = false;
        if (beta_[i] < lb_[b] - 1e-9 * (1.0 + std::abs(lb_[b]))) {
          viol = lb_[b] - beta_[i];
          lo_side = true;
        } else if (beta_[i] > ub_[b] + 1e-9 * (1.0 + std::abs(ub_[b]))) {
          viol = beta_[i] - ub_[b];
        }
        if (viol <= 0.0) continue;
        bool take = r < 0 || (bland ? b < basic_[static_cast<std::size_t>(r)] : viol > worst);
        if (take) {
          r = static_cast<std::int64_t>(i);
          worst = viol;
          below = lo_side;
        }
      }
      if (r < 0) return Status::optimal;
      const auto rr = static_cast<std::size_t>(r);
      const double* row = &T_[rr * n_total_];

      std::int64_t q = -1;
      double best_ratio = inf, best_abs = 0.0;
      for (std::size_t j = 0; j < n_total_; ++j) {
        if (pos_[j] >= 0 || is_fixed(j)) continue;
        const double a = row[j];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const bool up = !at_upper_[j];
        const bool ok = below ? ((up && a < 0.0) || (!up && a > 0.0)) : ((up && a > 0.0) || (!up && a < 0.0));
        if (!ok) continue;
        const double ratio = std::abs(d_[j]) / std::abs(a);
        bool take = false;
        if (q < 0 || ratio < best_ratio - 1e-12) {
          take = true;
        } else if (ratio <= best_ratio + 1e-12) {
          take = bland ? false : std::abs(a) > best_abs;
        }
        if (take) {
          q = static_cast<std::int64_t>(j);
          best_ratio = ratio;
          best_abs = std::abs(a);
        }
      }
      if (q < 0) return Status::infeasible;
      const auto qc = static_cast<std::size_t>(q);
      ++sol.iterations;
      if (best_ratio <= 1e-12)
        ++degenerate_streak;
      else
        degenerate_streak = 0;

      const std::size_t leaving = basic_[rr];
      const double target = below ? lb_[leaving] : ub_[leaving];
      const double theta = (beta_[rr] - target) / row[qc];
      const double entering_value = value_of_nonbasic(qc) + theta;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = T_[i * n_total_ + qc];
        if (a != 0.0) beta_[i] -= a * theta;
      }
      at_upper_[leaving] = below ? 0 : 1;
      at_upper_[qc] = 0;
      pivot(rr, qc);
      beta_[rr] = entering_value;
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basic_[i] < art_begin_) continue;
      const double* row = &T_[i * n_total_];
      std::int64_t q = -1;
      double best = 1e-7;
      for (std::size_t j = 0; j < art_begin_; ++j) {
        if (pos_[j] >= 0 || is_fixed(j)) continue;
        if (std::abs(row[j]) > best) {
          best = std::abs(row[j]);
          q = static_cast<std::int64_t>(j);
        }
      }
      if (q < 0) continue;  // redundant row; artificial stays basic at zero
      const auto qc = static_cast<std::size_t>(q);
      const double v = value_of_nonbasic(qc);
      at_upper_[basic_[i]] = 0;
      at_upper_[qc] = 0;
      pivot(i, qc);
      beta_[i] = v;
    }
  }

  void extract(LpSolution& sol) {
    std::vector<double> xi(n_total_, 0.0);
    for (std::size_t j = 0; j < n_total_; ++j) xi[j] = value_of_nonbasic(j);
    for (std::size_t i = 0; i < m_; ++i) xi[basic_[i]] = beta_[i];
    const auto n = lp_->num_cols();
    sol.x.assign(n, 0.0);
    std::vector<std::int64_t> owner(n_struct_, -1);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& mp = map_[j];
      double v = mp.offset;
      if (mp.a >= 0) {
        v += mp.sign * xi[mp.a];
        owner[mp.a] = static_cast<std::int64_t>(j);
      }
      if (mp.b >= 0) {
        v -= xi[mp.b];
        owner[mp.b] = static_cast<std::int64_t>(j);
      }
      // Snap round-off bound violations.
      if (v < lo_[j] && v > lo_[j] - 1e-9) v = lo_[j];
      if (v > hi_[j] && v < hi_[j] + 1e-9) v = hi_[j];
      sol.x[j] = v;
    }
    sol.objective = lp_->objective(sol.x);
    for (std::size_t i = 0; i < m_; ++i)
      if (basic_[i] < n_struct_ && owner[basic_[i]] >= 0)
        sol.basis.push_back(static_cast<std::uint32_t>(owner[basic_[i]]));
    std::sort(sol.basis.begin(), sol.basis.end());
    sol.basis.erase(std::unique(sol.basis.begin(), sol.basis.end()), sol.basis.end());
  }

  const LinearProgram* lp_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  SimplexOptions opt_;

  std::vector<Mapping> map_;
  std::vector<double> col_ub_;
  std::size_t n_struct_ = 0, slack_begin_ = 0, art_begin_ = 0, n_art_ = 0, n_total_ = 0, m_ = 0;

  std::vector<double> T_;  // m x n_total, row-major, holds B^-1 A
  std::vector<double> beta_, rhs_;
  std::vector<std::size_t> basic_;
  std::vector<std::int64_t> pos_;
  std::vector<char> at_upper_;
  std::vector<double> lb_, ub_, cost_, cost_int_, d_;
  std::vector<std::size_t> nz_;
};

}  // namespace detail

// Returns a basic optimal solution when one exists. Integrality flags are
// ignored.
inline LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opt = {}) {
  lp.validate();
  return detail::BoundedSimplex(lp, lp.lower, lp.upper, opt).solve();
}

struct BranchAndBoundOptions {
  std::chrono::milliseconds time_limit{10'000};
  std::size_t node_limit = 0;  // 0: unlimited
  double integrality_tol = 1e-6;
  double relative_gap_tol = 1e-9;
  SimplexOptions lp;
};

inline bool is_integral(const LinearProgram& lp, std::span<const double> x, double tol) {
  for (std::size_t j = 0; j < lp.num_cols(); ++j)
    if (lp.integral[j] && std::abs(x[j] - std::round(x[j])) > tol) return false;
  return true;
}

// Best-first branch-and-bound. Branches on the most fractional integer
// variable (lowest index on ties), down-branch created first. On timeout the
// status is time_limit (node_limit when the node budget runs out) and
// `x`/`objective` hold the incumbent if any, with `best_bound` the smallest
// open-node bound.
inline LpSolution solve_ilp(const LinearProgram& lp, const BranchAndBoundOptions& opt = {}) {
  lp.validate();
  const auto deadline = Clock::now() + opt.time_limit;
  struct Node {
    double bound;
    std::size_t seq;
    std::vector<std::pair<std::uint32_t, std::pair<double, double>>> fixes;
  };
  // Depth-first until an incumbent exists, then best bound (ties by age).
  std::vector<Node> open;
  std::size_t seq = 0;
  open.push_back(Node{-inf, seq++, {}});

  LpSolution best;
  best.status = Status::infeasible;
  std::size_t nodes = 0, branches = 0, pivots = 0;
  std::vector<double> lo, hi;
  auto simplex_opt = opt.lp;
  simplex_opt.deadline = deadline;

  auto prunable = [&](double bound) {
    if (!best.has_solution()) return false;
    return bound >= best.objective - opt.relative_gap_tol * std::max(1.0, std::abs(best.objective));
  };
  auto take_next = [&]() {
    std::size_t k = 0;
    for (std::size_t i = 1; i < open.size(); ++i) {
      const Node& a = open[i];
      const Node& b = open[k];
      bool better = best.has_solution() ? (a.bound < b.bound || (a.bound == b.bound && a.seq < b.seq)) : a.seq > b.seq;
      if (better) k = i;
    }
    Node n = std::move(open[k]);
    open[k] = std::move(open.back());
    open.pop_back();
    return n;
  };

  // Nodes re-optimize in place from the previous node, or from the root's
  // optimal tableau.
  std::optional<detail::BoundedSimplex> root, work;
  bool timed_out = false, out_of_nodes = false;
  while (!open.empty()) {
    if (Clock::now() > deadline) {
      timed_out = true;
      break;
    }
    if (opt.node_limit && nodes >= opt.node_limit) {
      out_of_nodes = true;
      break;
    }
    Node node = take_next();
    if (prunable(node.bound)) continue;

    lo = lp.lower;
    hi = lp.upper;
    for (const auto& [j, b] : node.fixes) {
      lo[j] = std::max(lo[j], b.first);
      hi[j] = std::min(hi[j], b.second);
    }
    ++nodes;
    LpSolution rel;
    if (!root) {
      root.emplace(lp, lp.lower, lp.upper, simplex_opt);
      rel = root->solve();
      if (rel.status != Status::optimal) root.reset();
    } else {
      std::optional<LpSolution> warm;
      if (work) warm = work->resolve(lo, hi);
      if (!warm) {
        work = *root;
        warm = work->resolve(lo, hi);
      }
      if (warm) {
        rel = std::move(*warm);
        // After an infeasible node the basis is far from its siblings.
        if (rel.status != Status::optimal) work.reset();
      } else {
        work.reset();
        rel = detail::BoundedSimplex(lp, lo, hi, simplex_opt).solve();
      }
    }
    pivots += rel.iterations;
    if (rel.status == Status::time_limit) {
      open.push_back(std::move(node));
      timed_out = true;
      break;
    }
    if (rel.status == Status::unbounded) {
      best.status = Status::unbounded;
      best.nodes = nodes;
      best.iterations = pivots;
      return best;
    }
    if (rel.status != Status::optimal) continue;
    if (prunable(rel.objective)) continue;

    // Most fractional integer variable.
    std::int64_t branch = -1;
    double best_frac = opt.integrality_tol;
    for (std::size_t j = 0; j < lp.num_cols(); ++j) {
      if (!lp.integral[j]) continue;
      double f = rel.x[j] - std::floor(rel.x[j]);
      double dist = std::min(f, 1.0 - f);
      if (dist > best_frac + 1e-15) {
        best_frac = dist;
        branch = static_cast<std::int64_t>(j);
      }
    }
    if (branch < 0) {
      best.x = std::move(rel.x);
      best.objective = rel.objective;
      best.basis = std::move(rel.basis);
      best.status = Status::optimal;
      continue;
    }
    ++branches;
    const auto j = static_cast<std::uint32_t>(branch);
    const double v = rel.x[j];
    Node down{rel.objective, 0, node.fixes};
    down.fixes.push_back({j, {-inf, std::floor(v)}});
    Node up{rel.objective, 0, std::move(node.fixes)};
    up.fixes.push_back({j, {std::ceil(v), inf}});
    // The child nearer the relaxation value is explored first when diving.
    const bool up_first = v - std::floor(v) >= 0.5;
    Node& first = up_first ? up : down;
    Node& second = up_first ? down : up;
    second.seq = seq++;
    first.seq = seq++;
    open.push_back(std::move(second));
    open.push_back(std::move(first));
  }

  best.nodes = nodes;
  best.branches = branches;
  best.iterations = pivots;
  if (timed_out || out_of_nodes) {
    double bound = best.has_solution() ? best.objective : inf;
    for (const auto& n : open) bound = std::min(bound, n.bound);
    best.best_bound = bound;
    best.status = timed_out ? Status::time_limit : Status::node_limit;
    return best;
  }
  if (best.has_solution()) best.best_bound = best.objective;
  return best;
}

// Writes the program in MPS layout (names padded to fixed fields; numbers are
// printed with full precision and may overrun the classic 12-column width).
inline void write_mps(std::ostream& os, const LinearProgram& lp, std::string_view name = "DNNSPLIT") {
  auto rname = [](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "R%07zu", i);
    return std::string(buf);
  };
  auto cname = [](std::size_t j) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "C%07zu", j);
    return std::string(buf);
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto line = [&](std::string_view f1, const std::string& f2, const std::string& f3, const std::string& f4) {
    char buf[128];
    std::snprintf(buf, sizeof buf, " %-2.2s %-8s  %-8s  %s", std::string(f1).c_str(), f2.c_str(), f3.c_str(),
                  f4.c_str());
    os << buf << '\n';
  };

  std::vector<std::vector<std::pair<std::size_t, double>>> cols(lp.num_cols());
  for (std::size_t i = 0; i < lp.rows.size(); ++i)
    for (const auto& t : lp.rows[i].terms) cols[t.col].emplace_back(i, t.coef);

  os << "NAME          " << name << '\n' << "ROWS\n";
  os << " N  COST\n";
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const char* k = lp.rows[i].rel == Relation::less_equal ? "L" : lp.rows[i].rel == Relation::equal ? "E" : "G";
    os << ' ' << k << "  " << rname(i) << '\n';
  }
  os << "COLUMNS\n";
  bool in_int = false;
  std::size_t marker = 0;
  for (std::size_t j = 0; j < lp.num_cols(); ++j) {
    bool want = lp.integral[j] != 0;
    if (want != in_int) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "    MARKER%04zu  'MARKER'                 %s", marker++,
                    want ? "'INTORG'" : "'INTEND'");
      os << buf << '\n';
      in_int = want;
    }
    if (lp.cost[j] != 0.0) line("", cname(j), "COST", num(lp.cost[j]));
    for (auto [i, v] : cols[j]) line("", cname(j), rname(i), num(v));
    if (lp.cost[j] == 0.0 && cols[j].empty()) line("", cname(j), "COST", "0");
  }
  if (in_int) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "    MARKER%04zu  'MARKER'                 'INTEND'", marker++);
    os << buf << '\n';
  }
  os << "RHS\n";
  for (std::size_t i = 0; i < lp.rows.size(); ++i)
    if (lp.rows[i].rhs != 0.0) line("", "RHS", rname(i), num(lp.rows[i].rhs));
  os << "BOUNDS\n";
  for (std::size_t j = 0; j < lp.num_cols(); ++j) {
    double lo = lp.lower[j], hi = lp.upper[j];
    if (lo == hi) {
      line("FX", "BND", cname(j), num(lo));
      continue;
    }
    if (lo == -inf && hi == inf) {
      line("FR", "BND", cname(j), "");
      continue;
    }
    if (lo == -inf)
      line("MI", "BND", cname(j), "");
    else if (lo != 0.0)
      line("LO", "BND", cname(j), num(lo));
    if (hi != inf) line("UP", "BND", cname(j), num(hi));
  }
  os << "ENDATA\n";
}

}  // namespace dnnsplit::lp
