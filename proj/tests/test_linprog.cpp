#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dnnsplit/linprog.hpp"
#include "dnnsplit/tu_check.hpp"

using namespace dnnsplit;
using namespace dnnsplit::lp;

namespace {

// Brute-force LP oracle for bounded programs with inequality and equality
// rows: enumerate every choice of n active constraints and keep the best
// feasible vertex.
std::optional<double> vertex_enumeration(const LinearProgram& lp) {
  const std::size_t n = lp.num_cols();
  struct Hyper {
    std::vector<double> a;
    double b;
  };
  std::vector<Hyper> eq, ineq;
  for (const auto& r : lp.rows) {
    Hyper h{std::vector<double>(n, 0.0), r.rhs};
    for (const auto& t : r.terms) h.a[t.col] += t.coef;
    (r.rel == Relation::equal ? eq : ineq).push_back(h);
  }
  for (std::size_t j = 0; j < n; ++j) {
    Hyper lo{std::vector<double>(n, 0.0), lp.lower[j]};
    lo.a[j] = 1.0;
    Hyper hi{std::vector<double>(n, 0.0), lp.upper[j]};
    hi.a[j] = 1.0;
    ineq.push_back(lo);
    ineq.push_back(hi);
  }
  if (eq.size() > n) return std::nullopt;
  const std::size_t need = n - eq.size();
  std::optional<double> best;
  std::vector<std::size_t> pick(need);
  auto solve_system = [&](const std::vector<const Hyper*>& hs) -> std::optional<std::vector<double>> {
    std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) m[i][j] = hs[i]->a[j];
      m[i][n] = hs[i]->b;
    }
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t p = c;
      for (std::size_t i = c + 1; i < n; ++i)
        if (std::abs(m[i][c]) > std::abs(m[p][c])) p = i;
      if (std::abs(m[p][c]) < 1e-9) return std::nullopt;
      std::swap(m[p], m[c]);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == c) continue;
        double f = m[i][c] / m[c][c];
        for (std::size_t j = c; j <= n; ++j) m[i][j] -= f * m[c][j];
      }
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = m[i][n] / m[i][i];
    return x;
  };
  auto rec = [&](auto&& self, std::size_t k, std::size_t start) -> void {
    if (k == need) {
      std::vector<const Hyper*> hs;
      for (auto& h : eq) hs.push_back(&h);
      for (auto i : pick) hs.push_back(&ineq[i]);
      auto x = solve_system(hs);
      if (!x || lp.max_violation(*x) > 1e-7) return;
      double z = lp.objective(*x);
      if (!best || z < *best) best = z;
      return;
    }
    for (std::size_t i = start; i < ineq.size(); ++i) {
      pick[k] = i;
      self(self, k + 1, i + 1);
    }
  };
  rec(rec, 0, 0);
  return best;
}

LinearProgram random_lp(std::mt19937_64& rng, std::size_t n, std::size_t m, bool with_eq) {
  std::uniform_int_distribution<int> coef(-5, 5);
  std::uniform_int_distribution<int> rel(0, 1);
  LinearProgram lp;
  for (std::size_t j = 0; j < n; ++j) lp.add_column(coef(rng), coef(rng) < 0 ? -2.0 : 0.0, 3.0 + rel(rng));
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<Term> t;
    for (std::size_t j = 0; j < n; ++j)
      if (int c = coef(rng); c != 0) t.push_back({static_cast<std::uint32_t>(j), double(c)});
    Relation r = (with_eq && i == 0) ? Relation::equal : (rel(rng) ? Relation::less_equal : Relation::greater_equal);
    lp.add_row(std::move(t), r, coef(rng));
  }
  return lp;
}

}  // namespace

TEST(SolveLp, LowerBoundRow) {
  LinearProgram lp;
  lp.add_column(1.0, 0.0, 10.0);
  lp.add_row({{0, 1.0}}, Relation::greater_equal, 3.0);
  auto s = solve_lp(lp);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.objective, 3.0, 1e-9);
}

TEST(SolveLp, FacetOptimum) {
  LinearProgram lp;
  lp.add_column(-1.0, 0.0, 1.0);
  lp.add_column(-1.0, 0.0, 1.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, Relation::less_equal, 1.0);
  auto s = solve_lp(lp);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.objective, -1.0, 1e-9);
  EXPECT_NEAR(s.x[0] + s.x[1], 1.0, 1e-9);
}

TEST(SolveLp, InfeasibleAndUnbounded) {
  LinearProgram a;
  a.add_column(1.0, 0.0, 1.0);
  a.add_row({{0, 1.0}}, Relation::greater_equal, 2.0);
  EXPECT_EQ(solve_lp(a).status, Status::infeasible);

  LinearProgram b;
  b.add_column(-1.0, 0.0, inf);
  b.add_row({{0, 1.0}}, Relation::greater_equal, 1.0);
  EXPECT_EQ(solve_lp(b).status, Status::unbounded);
}

TEST(SolveLp, FreeAndUpperOnlyVariables) {
  // min x - y, x free, y <= 4, x + y >= 1, x >= -3 via a row.
  LinearProgram lp;
  lp.add_column(1.0, -inf, inf);
  lp.add_column(-1.0, -inf, 4.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, Relation::greater_equal, 1.0);
  lp.add_row({{0, 1.0}}, Relation::greater_equal, -3.0);
  auto s = solve_lp(lp);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.objective, -7.0, 1e-9);
  EXPECT_NEAR(s.x[0], -3.0, 1e-9);
  EXPECT_NEAR(s.x[1], 4.0, 1e-9);
}

TEST(SolveLp, FixedVariablesAndEmptyRows) {
  LinearProgram lp;
  lp.add_column(2.0, 1.5, 1.5);
  lp.add_column(1.0, 0.0, 5.0);
  lp.add_row({{0, 1.0}}, Relation::less_equal, 2.0);  // becomes empty
  lp.add_row({{0, 1.0}, {1, 1.0}}, Relation::equal, 4.0);
  auto s = solve_lp(lp);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.x[1], 2.5, 1e-9);
  EXPECT_NEAR(s.objective, 5.5, 1e-9);

  lp.rows[0].rhs = 1.0;  // fixed value now violates the empty row
  EXPECT_EQ(solve_lp(lp).status, Status::infeasible);
}

TEST(SolveLp, IterationLimit) {
  LinearProgram lp;
  for (int j = 0; j < 5; ++j) lp.add_column(-1.0, 0.0, 1.0);
  std::vector<Term> t;
  for (std::uint32_t j = 0; j < 5; ++j) t.push_back({j, 1.0});
  lp.add_row(t, Relation::greater_equal, 2.0);
  lp.add_row(t, Relation::less_equal, 3.0);
  SimplexOptions o;
  o.max_pivots = 1;
  EXPECT_EQ(solve_lp(lp, o).status, Status::iteration_limit);
}

TEST(SolveLp, MatchesVertexEnumeration) {
  std::mt19937_64 rng(7);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto lp = random_lp(rng, 5, 4, trial % 3 == 0);
    auto oracle = vertex_enumeration(lp);
    auto s = solve_lp(lp);
    if (!oracle) {
      EXPECT_EQ(s.status, Status::infeasible) << "trial " << trial;
      continue;
    }
    ++feasible;
    ASSERT_EQ(s.status, Status::optimal) << "trial " << trial;
    EXPECT_NEAR(s.objective, *oracle, 1e-7) << "trial " << trial;
    EXPECT_LE(lp.max_violation(s.x), 1e-7);
  }
  EXPECT_GT(feasible, 50);
}

TEST(SolveLp, WeakDualitySanity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto lp = random_lp(rng, 5, 3, false);
    auto s = solve_lp(lp);
    if (s.status != Status::optimal) continue;
    for (int k = 0; k < 200; ++k) {
      std::vector<double> x(5);
      for (int j = 0; j < 5; ++j) x[j] = lp.lower[j] + u(rng) * (lp.upper[j] - lp.lower[j]);
      if (lp.max_violation(x) <= 0.0) {
        EXPECT_GE(lp.objective(x), s.objective - 1e-7);
      }
    }
  }
}

TEST(SolveLp, Deterministic) {
  std::mt19937_64 rng(3);
  auto lp = random_lp(rng, 5, 4, false);
  auto a = solve_lp(lp), b = solve_lp(lp);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.basis, b.basis);
}

TEST(SolveLp, DegenerateCyclingExample) {
  // Beale's classic cycling example for the textbook Dantzig rule.
  LinearProgram lp;
  lp.add_column(-0.75, 0.0, inf);
  lp.add_column(150.0, 0.0, inf);
  lp.add_column(-0.02, 0.0, inf);
  lp.add_column(6.0, 0.0, inf);
  lp.add_row({{0, 0.25}, {1, -60.0}, {2, -0.04}, {3, 9.0}}, Relation::less_equal, 0.0);
  lp.add_row({{0, 0.5}, {1, -90.0}, {2, -0.02}, {3, 3.0}}, Relation::less_equal, 0.0);
  lp.add_row({{2, 1.0}}, Relation::less_equal, 1.0);
  auto s = solve_lp(lp);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.objective, -0.05, 1e-9);
}

TEST(SolveLp, RejectsInvalidPrograms) {
  LinearProgram lp;
  lp.add_column(1.0, 2.0, 1.0);
  EXPECT_THROW(solve_lp(lp), InvalidProgram);
  LinearProgram b;
  b.add_column(1.0, 0.0, 1.0);
  b.add_row({{3, 1.0}}, Relation::less_equal, 1.0);
  EXPECT_THROW(solve_lp(b), InvalidProgram);
}

TEST(SolveIlp, Knapsack) {
  LinearProgram lp;
  lp.add_column(-3.0, 0.0, 1.0, true);
  lp.add_column(-2.0, 0.0, 1.0, true);
  lp.add_row({{0, 1.0}, {1, 1.0}}, Relation::less_equal, 1.0);
  auto s = solve_ilp(lp);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(-s.objective, 3.0, 1e-9);
}

TEST(SolveIlp, TuInstanceSolvedAtRoot) {
  // Shortest path on a 4-node digraph: incidence matrix is TU.
  LinearProgram lp;
  const int arcs[][2] = {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}};
  const double w[] = {1.0, 4.0, 1.0, 5.0, 1.0};
  for (double c : w) lp.add_column(c, 0.0, 1.0, true);
  for (int v = 0; v < 4; ++v) {
    std::vector<Term> t;
    for (std::uint32_t a = 0; a < 5; ++a) {
      if (arcs[a][0] == v) t.push_back({a, 1.0});
      if (arcs[a][1] == v) t.push_back({a, -1.0});
    }
    lp.add_row(t, Relation::equal, v == 0 ? 1.0 : v == 3 ? -1.0 : 0.0);
  }
  auto s = solve_ilp(lp);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.objective, 3.0, 1e-9);
  EXPECT_EQ(s.branches, 0u);
  EXPECT_EQ(s.nodes, 1u);
}

TEST(SolveIlp, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coef(-6, 6);
  for (int trial = 0; trial < 150; ++trial) {
    LinearProgram lp;
    for (int j = 0; j < 8; ++j) lp.add_column(coef(rng), 0.0, 1.0, true);
    for (int i = 0; i < 4; ++i) {
      std::vector<Term> t;
      for (std::uint32_t j = 0; j < 8; ++j)
        if (int c = coef(rng); c != 0) t.push_back({j, double(c)});
      lp.add_row(t, i % 2 ? Relation::less_equal : Relation::greater_equal, coef(rng) / 2);
    }
    std::optional<double> best;
    for (int mask = 0; mask < 256; ++mask) {
      std::vector<double> x(8);
      for (int j = 0; j < 8; ++j) x[j] = (mask >> j) & 1;
      if (lp.max_violation(x) > 1e-9) continue;
      double z = lp.objective(x);
      if (!best || z < *best) best = z;
    }
    auto s = solve_ilp(lp);
    if (!best) {
      EXPECT_EQ(s.status, Status::infeasible) << trial;
      continue;
    }
    ASSERT_EQ(s.status, Status::optimal) << trial;
    EXPECT_NEAR(s.objective, *best, 1e-9) << trial;
    EXPECT_TRUE(is_integral(lp, s.x, 1e-6));
  }
}

TEST(SolveIlp, TimeLimitKeepsIncumbentAndBound) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> w(10, 60);
  LinearProgram lp;
  std::vector<Term> t;
  for (std::uint32_t j = 0; j < 40; ++j) {
    lp.add_column(-w(rng), 0.0, 1.0, true);
    t.push_back({j, double(w(rng))});
  }
  lp.add_row(t, Relation::less_equal, 400.5);
  BranchAndBoundOptions o;
  o.time_limit = std::chrono::milliseconds(0);
  auto s = solve_ilp(lp, o);
  EXPECT_EQ(s.status, Status::time_limit);
}

TEST(SolveIlp, NodeLimitIsDeterministic) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> w(10, 60);
  LinearProgram lp;
  std::vector<Term> t;
  for (std::uint32_t j = 0; j < 40; ++j) {
    lp.add_column(-w(rng), 0.0, 1.0, true);
    t.push_back({j, double(w(rng))});
  }
  lp.add_row(t, Relation::less_equal, 400.5);
  BranchAndBoundOptions o;
  o.node_limit = 25;
  auto a = solve_ilp(lp, o);
  auto b = solve_ilp(lp, o);
  EXPECT_EQ(a.status, Status::node_limit);
  EXPECT_EQ(a.nodes, 25u);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.best_bound, b.best_bound);
  if (a.has_solution()) {
    EXPECT_LE(a.best_bound, a.objective);
  }
  o.node_limit = 0;
  auto full = solve_ilp(lp, o);
  ASSERT_EQ(full.status, Status::optimal);
  EXPECT_LE(a.best_bound, full.objective + 1e-9);
}

TEST(Mps, WritesSections) {
  LinearProgram lp;
  lp.add_column(1.0, 0.0, 1.0, true);
  lp.add_column(-2.0, -inf, 3.0);
  lp.add_row({{0, 1.0}, {1, 1.0}}, Relation::greater_equal, 1.0);
  std::ostringstream os;
  write_mps(os, lp);
  auto s = os.str();
  for (const char* sec : {"NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA", "'INTORG'", "'INTEND'", " MI ", " UP "})
    EXPECT_NE(s.find(sec), std::string::npos) << sec;
}

TEST(TuCheck, IncidenceMatrixPasses) {
  // Node-arc incidence of a 5-node digraph with 8 arcs.
  const int arcs[][2] = {{0, 1}, {1, 2}, {2, 0}, {2, 3}, {3, 4}, {4, 0}, {1, 3}, {4, 2}};
  IntMatrix m(5, 8);
  for (int a = 0; a < 8; ++a) {
    m.at(arcs[a][0], a) = 1;
    m.at(arcs[a][1], a) = -1;
  }
  TuOptions o;
  o.max_order = 5;
  auto v = check_totally_unimodular(m, o);
  EXPECT_FALSE(v.violated);
  EXPECT_GT(v.exhaustive_checked, 0u);
}

TEST(TuCheck, FindsDeterminantTwo) {
  IntMatrix m(2, 2);
  m.at(0, 0) = 1;
  m.at(0, 1) = 1;
  m.at(1, 0) = 1;
  m.at(1, 1) = -1;
  auto v = check_totally_unimodular(m);
  ASSERT_TRUE(v.violated);
  EXPECT_EQ(std::abs(v.det), 2);
}

TEST(TuCheck, RejectsLargeEntries) {
  IntMatrix m(1, 2);
  m.at(0, 1) = 2;
  auto v = check_totally_unimodular(m);
  EXPECT_TRUE(v.violated);
  EXPECT_EQ(v.rows.size(), 1u);
}

TEST(TuCheck, ExhaustiveMatchesBruteForce) {
  // Random {-1,0,1} matrices: connected-submatrix search agrees with plain
  // enumeration of every square submatrix.
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> e(-1, 1);
  for (int trial = 0; trial < 60; ++trial) {
    IntMatrix m(4, 5);
    for (auto& x : m.a) x = (rng() % 3 == 0) ? e(rng) : 0;
    bool brute_violation = false;
    for (int rmask = 1; rmask < 16; ++rmask)
      for (int cmask = 1; cmask < 32; ++cmask) {
        if (__builtin_popcount(rmask) != __builtin_popcount(cmask)) continue;
        std::vector<int> r, c;
        for (int i = 0; i < 4; ++i)
          if (rmask >> i & 1) r.push_back(i);
        for (int j = 0; j < 5; ++j)
          if (cmask >> j & 1) c.push_back(j);
        std::vector<long long> a;
        for (int i : r)
          for (int j : c) a.push_back(m.at(i, j));
        auto d = integer_determinant(a, r.size());
        if (d < -1 || d > 1) brute_violation = true;
      }
    TuOptions o;
    o.max_order = 4;
    o.sample_budget = 0;
    EXPECT_EQ(check_totally_unimodular(m, o).violated, brute_violation) << trial;
  }
}

TEST(TuCheck, Determinant) {
  EXPECT_EQ(integer_determinant({2, 1, 1, 3}, 2), 5);
  EXPECT_EQ(integer_determinant({0, 1, 1, 0}, 2), -1);
  EXPECT_EQ(integer_determinant({1, 2, 3, 4, 5, 6, 7, 8, 10}, 3), -3);
}
