#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dnnsplit/linprog.hpp"

// Total-unimodularity test for small integer matrices. Exhaustive up to a
// given order, random sampling beyond it.

namespace dnnsplit::lp {

struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> a;

  IntMatrix() = default;
  IntMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0) {}
  int& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  int at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

// Constraint matrix of an LP, rows in order. Throws if a coefficient is not
// an integer.
inline IntMatrix constraint_matrix(const LinearProgram& lp) {
  IntMatrix m(lp.num_rows(), lp.num_cols());
  for (std::size_t i = 0; i < lp.num_rows(); ++i)
    for (const auto& t : lp.rows[i].terms) {
      double v = m.at(i, t.col) + t.coef;
      if (v != std::round(v)) throw InvalidProgram("non-integer coefficient");
      m.at(i, t.col) = static_cast<int>(v);
    }
  return m;
}

// [M] -> [M I] with one identity column per row.
inline IntMatrix append_identity(const IntMatrix& m) {
  IntMatrix out(m.rows, m.cols + m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) out.at(i, j) = m.at(i, j);
    out.at(i, m.cols + i) = 1;
  }
  return out;
}

// Exact integer determinant (Bareiss).
inline long long integer_determinant(std::vector<long long> a, std::size_t n) {
  if (n == 0) return 1;
  long long sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k * n + k] == 0) {
      std::size_t p = k + 1;
      while (p < n && a[p * n + k] == 0) ++p;
      if (p == n) return 0;
      for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
    prev = a[k * n + k];
  }
  return sign * a[n * n - 1];
}

struct TuOptions {
  std::size_t max_order = 4;
  std::size_t sample_budget = 5000;
  std::size_t sample_max_order = 7;
  std::uint64_t seed = 1;
};

struct TuVerdict {
  bool violated = false;
  std::vector<std::size_t> rows;  // witness
  std::vector<std::size_t> cols;
  long long det = 0;
  std::size_t exhaustive_checked = 0;
  std::size_t sampled_checked = 0;
};

namespace detail {

class TuSearch {
 public:
  TuSearch(const IntMatrix& m, std::size_t k) : m_(m), k_(k) {
    const std::size_t n = m.rows + m.cols;
    adj_.resize(n);
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j)
        if (m.at(i, j) != 0) {
          adj_[i].push_back(m.rows + j);
          adj_[m.rows + j].push_back(i);
        }
    near_.assign(n, 0);
    in_sub_.assign(n, 0);
  }

  // Enumerates every connected square submatrix of order <= k. Returns false
  // on the first violation.
  bool run(TuVerdict& v) {
    verdict_ = &v;
    const std::size_t n = adj_.size();
    for (std::size_t s = 0; s < n; ++s) {
      if (adj_[s].empty()) continue;
      add(s);
      std::vector<std::size_t> ext;
      for (auto w : adj_[s])
        if (w > s) ext.push_back(w);
      bool ok = extend(ext, s);
      remove(s);
      if (!ok) return false;
    }
    return true;
  }

 private:
  bool is_row(std::size_t x) const { return x < m_.rows; }

  void add(std::size_t x) {
    sub_.push_back(x);
    in_sub_[x] = 1;
    ++near_[x];
    for (auto y : adj_[x]) ++near_[y];
    (is_row(x) ? nr_ : nc_)++;
  }
  void remove(std::size_t x) {
    sub_.pop_back();
    in_sub_[x] = 0;
    --near_[x];
    for (auto y : adj_[x]) --near_[y];
    (is_row(x) ? nr_ : nc_)--;
  }

  bool check() {
    if (nr_ != nc_) return true;
    ++verdict_->exhaustive_checked;
    std::vector<std::size_t> r, c;
    for (auto x : sub_) (is_row(x) ? r : c).push_back(is_row(x) ? x : x - m_.rows);
    std::sort(r.begin(), r.end());
    std::sort(c.begin(), c.end());
    std::vector<long long> a(r.size() * r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
      for (std::size_t j = 0; j < c.size(); ++j) a[i * r.size() + j] = m_.at(r[i], c[j]);
    auto d = integer_determinant(std::move(a), r.size());
    if (d < -1 || d > 1) {
      verdict_->violated = true;
      verdict_->rows = r;
      verdict_->cols = c;
      verdict_->det = d;
      return false;
    }
    return true;
  }

  bool extend(std::vector<std::size_t> ext, std::size_t root) {
    if (!check()) return false;
    while (!ext.empty()) {
      auto w = ext.back();
      ext.pop_back();
      if (is_row(w) ? nr_ >= k_ : nc_ >= k_) continue;
      std::vector<std::size_t> next = ext;
      for (auto u : adj_[w])
        if (u > root && near_[u] == 0) next.push_back(u);
      add(w);
      bool ok = extend(std::move(next), root);
      remove(w);
      if (!ok) return false;
    }
    return true;
  }

  const IntMatrix& m_;
  std::size_t k_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> near_;
  std::vector<char> in_sub_;
  std::vector<std::size_t> sub_;
  std::size_t nr_ = 0, nc_ = 0;
  TuVerdict* verdict_ = nullptr;
};

}  // namespace detail

// Exhaustive over all square submatrices of order <= max_order, then
// sample_budget random connected square submatrices of order
// max_order+1..sample_max_order.
inline TuVerdict check_totally_unimodular(const IntMatrix& m, const TuOptions& opt = {}) {
  TuVerdict v;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) {
      int x = m.at(i, j);
      if (x < -1 || x > 1) {
        v.violated = true;
        v.rows = {i};
        v.cols = {j};
        v.det = x;
        return v;
      }
    }
  if (!detail::TuSearch(m, opt.max_order).run(v)) return v;

  const std::size_t lo = opt.max_order + 1;
  const std::size_t hi = std::min({opt.sample_max_order, m.rows, m.cols});
  if (opt.sample_budget == 0 || lo > hi) return v;

  std::vector<std::vector<std::size_t>> row_nz(m.rows), col_nz(m.cols);
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      if (m.at(i, j) != 0) {
        row_nz[i].push_back(j);
        col_nz[j].push_back(i);
        entries.emplace_back(i, j);
      }
  if (entries.empty()) return v;

  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> rs, cs;
  std::vector<char> rin(m.rows), cin(m.cols);
  for (std::size_t s = 0; s < opt.sample_budget; ++s) {
    const std::size_t k = lo + s % (hi - lo + 1);
    auto [r0, c0] = entries[rng() % entries.size()];
    rs = {r0};
    cs = {c0};
    std::fill(rin.begin(), rin.end(), 0);
    std::fill(cin.begin(), cin.end(), 0);
    rin[r0] = 1;
    cin[c0] = 1;
    // Grow connected: alternately add a row touching chosen columns and a
    // column touching chosen rows; fall back to any unused index.
    std::vector<std::size_t> cand;
    while (rs.size() < k || cs.size() < k) {
      if (rs.size() < k) {
        cand.clear();
        for (auto c : cs)
          for (auto r : col_nz[c])
            if (!rin[r]) cand.push_back(r);
        std::size_t r;
        if (!cand.empty()) {
          r = cand[rng() % cand.size()];
        } else {
          do r = rng() % m.rows;
          while (rin[r]);
        }
        rin[r] = 1;
        rs.push_back(r);
      }
      if (cs.size() < k) {
        cand.clear();
        for (auto r : rs)
          for (auto c : row_nz[r])
            if (!cin[c]) cand.push_back(c);
        std::size_t c;
        if (!cand.empty()) {
          c = cand[rng() % cand.size()];
        } else {
          do c = rng() % m.cols;
          while (cin[c]);
        }
        cin[c] = 1;
        cs.push_back(c);
      }
    }
    std::sort(rs.begin(), rs.end());
    std::sort(cs.begin(), cs.end());
    std::vector<long long> a(k * k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) a[i * k + j] = m.at(rs[i], cs[j]);
    ++v.sampled_checked;
    auto d = integer_determinant(std::move(a), k);
    if (d < -1 || d > 1) {
      v.violated = true;
      v.rows = rs;
      v.cols = cs;
      v.det = d;
      return v;
    }
  }
  return v;
}

}  // namespace dnnsplit::lp
