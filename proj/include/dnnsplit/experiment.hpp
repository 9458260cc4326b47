#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "dnnsplit/format.hpp"
#include "dnnsplit/formulations.hpp"
#include "dnnsplit/linprog.hpp"
#include "dnnsplit/policies.hpp"
#include "dnnsplit/sim.hpp"
#include "dnnsplit/workload.hpp"

// Seeded parameter sweeps producing one result row per (cell, instance,
// algorithm).

namespace dnnsplit {

struct ExperimentConfig {
  std::vector<std::size_t> nodes{15};
  std::vector<std::size_t> jobs{3};
  std::vector<double> gammas{0.2, 2.0};
  std::size_t instances = 20;
  std::uint64_t seed = 1;
  // Hitting the time limit makes rows depend on machine speed; a node limit
  // does not.
  std::chrono::milliseconds time_limit{10000};
  std::size_t node_limit = 0;  // 0: unlimited
  bool budgets = true;
  double delta = 1e-6;
  std::vector<std::string> algorithms{"ilp", "lp-relax", "baseline", "greedy", "nfs", "opt"};
  // 0: DNNSPLIT_THREADS if set, else hardware concurrency.
  std::size_t threads = 0;
  // Wall-clock runtimes make the output non-reproducible, so they are opt-in.
  bool record_runtime = false;
  bool symmetric_rates = false;
  bool zero_network_delay = false;

  void validate() const {
    if (nodes.empty() || jobs.empty() || gammas.empty()) throw Error("experiment sweeps must be non-empty");
    if (instances < 1) throw Error("experiment needs at least one instance per cell");
    static const std::vector<std::string> known{"ilp", "lp-relax", "baseline", "greedy", "nfs", "opt"};
    for (const auto& a : algorithms)
      if (std::find(known.begin(), known.end(), a) == known.end()) throw Error("unknown algorithm " + a);
  }
};

struct ResultRow {
  std::size_t instance = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t jobs = 0;
  double gamma = 0.0;
  std::string algorithm;
  std::optional<double> objective_s;
  std::optional<double> c_max_fict_s;
  std::optional<double> c_max_actual_s;
  std::optional<double> runtime_ms;
  std::optional<bool> integral;
  std::optional<double> integrality_gap;
  std::optional<double> relative_gap_pct;
  std::string notes;
};

inline std::uint64_t instance_seed(std::uint64_t seed, std::size_t n, std::size_t jobs, double gamma,
                                   std::size_t instance) {
  return derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(jobs),
                            static_cast<std::uint64_t>(std::llround(gamma * 1e6)), static_cast<std::uint64_t>(instance)});
}

inline std::size_t default_threads() {
  if (const char* env = std::getenv("DNNSPLIT_THREADS")) {
    char* end = nullptr;
    auto v = std::strtoul(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Evaluated plan of one path per job, priorities following job ids.
inline RoutePlan plan_in_job_order(const Scenario& sc, std::vector<LayeredPath> paths) {
  RoutePlan plan;
  for (std::uint32_t j = 0; j < paths.size(); ++j) {
    RouteEntry e;
    e.job = j;
    e.priority = j;
    e.path = std::move(paths[j]);
    e.simple = is_simple_in_physical(sc.network, e.path);
    plan.entries.push_back(std::move(e));
  }
  evaluate_plan(sc, plan, QueueSnapshot::from_network(sc.network));
  return plan;
}

namespace detail {

inline bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

inline void fill_plan_metrics(ResultRow& r, const RoutePlan& plan) {
  r.c_max_fict_s = plan.c_max_fict();
  r.c_max_actual_s = plan.c_max_actual();
  if (!plan.all_simple()) r.notes = r.notes.empty() ? "non-simple-path" : r.notes + ";non-simple-path";
}

inline std::vector<ResultRow> run_instance(const ExperimentConfig& cfg, std::size_t n, std::size_t J, double gamma,
                                           std::size_t instance) {
  using Clock = std::chrono::steady_clock;
  const auto seed = instance_seed(cfg.seed, n, J, gamma, instance);
  auto base = [&](const std::string& algo) {
    ResultRow r;
    r.instance = instance;
    r.seed = seed;
    r.n = n;
    r.jobs = J;
    r.gamma = gamma;
    r.algorithm = algo;
    return r;
  };
  std::vector<ResultRow> rows;
  Scenario sc;
  try {
    ScenarioParams p;
    p.nodes = n;
    p.jobs = J;
    p.gamma = gamma;
    p.seed = seed;
    p.symmetric_rates = cfg.symmetric_rates;
    sc = generate_scenario(p);
    sc.cost.zero_network_delay = cfg.zero_network_delay;
  } catch (const GenerationFailed&) {
    for (const auto& a : cfg.algorithms) {
      rows.push_back(base(a));
      rows.back().notes = "generation-failed";
    }
    return rows;
  }

  auto timed = [&](ResultRow& r, auto&& fn) {
    auto t0 = Clock::now();
    try {
      fn();
    } catch (const InfeasibleTopology&) {
      r.notes = "infeasible";
    } catch (const SizeLimit&) {
      r.notes = "size-limit";
    } catch (const Error& e) {
      r.notes = std::string("error: ") + e.what();
    }
    if (cfg.record_runtime) r.runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  FormulationOptions fo;
  fo.delta = cfg.delta;
  fo.budgets = cfg.budgets;
  lp::BranchAndBoundOptions bo;
  bo.time_limit = cfg.time_limit;
  bo.node_limit = cfg.node_limit;

  std::optional<double> o_ilp, o_ilp_pen, o_lp, c_greedy;
  std::optional<ResultRow> ilp_row, lp_row;
  const bool want_ilp = has(cfg.algorithms, "ilp") || has(cfg.algorithms, "baseline");
  const bool want_lp = has(cfg.algorithms, "lp-relax");

  if (want_ilp) {
    ResultRow r = base("ilp");
    timed(r, [&] {
      auto prog = build_service_ilp(sc, fo);
      auto s = lp::solve_ilp(prog.lp, bo);
      if (s.status == lp::Status::infeasible) {
        r.notes = "infeasible";
        return;
      }
      if (s.status == lp::Status::time_limit) r.notes = "time-limit";
      if (s.status == lp::Status::node_limit) r.notes = "node-limit";
      if (!s.has_solution()) return;
      r.objective_s = prog.raw_objective(s.x);
      r.integral = lp::is_integral(prog.lp, s.x, 1e-6);
      if (s.status == lp::Status::optimal) {
        o_ilp = r.objective_s;
        o_ilp_pen = s.objective;
      }
      std::vector<LayeredPath> paths;
      for (std::size_t j = 0; j < sc.jobs.size(); ++j) paths.push_back(extract_path(prog, s.x, j));
      fill_plan_metrics(r, plan_in_job_order(sc, std::move(paths)));
    });
    ilp_row = r;
  }
  if (want_lp) {
    ResultRow r = base("lp-relax");
    timed(r, [&] {
      auto lfo = fo;
      lfo.relax = true;
      auto prog = build_service_ilp(sc, lfo);
      auto s = lp::solve_lp(prog.lp, bo.lp);
      if (s.status == lp::Status::infeasible) {
        r.notes = "infeasible";
        return;
      }
      if (s.status != lp::Status::optimal) {
        r.notes = lp::to_string(s.status);
        return;
      }
      r.objective_s = prog.raw_objective(s.x);
      r.integral = std::all_of(s.x.begin(), s.x.end(), [](double v) { return std::abs(v - std::round(v)) <= 1e-6; });
      o_lp = s.objective;
    });
    lp_row = r;
  }
  // O_ILP / O_LP on the objectives both solvers minimize.
  if (ilp_row && lp_row && o_ilp_pen && o_lp && *o_lp > 0.0) {
    ilp_row->integrality_gap = *o_ilp_pen / *o_lp;
    lp_row->integrality_gap = ilp_row->integrality_gap;
  }

  for (const auto& a : cfg.algorithms) {
    if (a == "ilp") {
      rows.push_back(*ilp_row);
    } else if (a == "lp-relax") {
      rows.push_back(*lp_row);
    } else if (a == "baseline") {
      ResultRow r = base(a);
      timed(r, [&] {
        double total = 0.0;
        std::vector<LayeredPath> paths;
        for (const auto& job : sc.jobs) {
          auto b = assignment_baseline_route(sc.network, job, sc.cost);
          total += b.service_time;
          paths.push_back(std::move(b.path));
        }
        r.objective_s = total;
        fill_plan_metrics(r, plan_in_job_order(sc, std::move(paths)));
        if (o_ilp && *o_ilp > 0.0) r.relative_gap_pct = (total - *o_ilp) / *o_ilp * 100.0;
      });
      rows.push_back(r);
    } else if (a == "greedy") {
      ResultRow r = base(a);
      timed(r, [&] {
        PolicyOptions po;
        po.delta = cfg.delta;
        auto plan = greedy_route(sc, po);
        evaluate_plan(sc, plan, QueueSnapshot::from_network(sc.network));
        r.objective_s = plan.c_max_fict();
        c_greedy = r.objective_s;
        fill_plan_metrics(r, plan);
      });
      rows.push_back(r);
    } else if (a == "nfs") {
      ResultRow r = base(a);
      timed(r, [&] {
        auto plan = nfs_route(sc);
        evaluate_plan(sc, plan, QueueSnapshot::from_network(sc.network));
        r.objective_s = plan.c_max_fict();
        fill_plan_metrics(r, plan);
        if (c_greedy && *c_greedy > 0.0) r.relative_gap_pct = (*r.objective_s - *c_greedy) / *c_greedy * 100.0;
      });
      rows.push_back(r);
    } else if (a == "opt") {
      ResultRow r = base(a);
      timed(r, [&] {
        auto plan = brute_force_opt(sc, EvalSystem::fictitious, QueueSnapshot::from_network(sc.network));
        r.objective_s = plan.c_max_fict();
        fill_plan_metrics(r, plan);
        if (c_greedy && *r.objective_s > 0.0)
          r.relative_gap_pct = (*c_greedy - *r.objective_s) / *r.objective_s * 100.0;
      });
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace detail

// Runs every cell x instance on a worker pool; rows come back in (n, J,
// gamma, instance, algorithm) order regardless of scheduling.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Task {
    std::size_t n, J;
    double gamma;
    std::size_t instance;
  };
  std::vector<Task> tasks;
  for (auto n : cfg.nodes)
    for (auto J : cfg.jobs)
      for (auto g : cfg.gammas)
        for (std::size_t i = 0; i < cfg.instances; ++i) tasks.push_back({n, J, g, i});

  std::vector<std::vector<ResultRow>> out(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
      const auto& t = tasks[k];
      out[k] = detail::run_instance(cfg, t.n, t.J, t.gamma, t.instance);
    }
  };
  const std::size_t threads = std::min(cfg.threads ? cfg.threads : default_threads(), tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::vector<ResultRow> rows;
  for (auto& v : out)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "instance,seed,n,J,gamma,algorithm,objective_s,c_max_fict_s,c_max_actual_s,runtime_ms,integral,"
        "integrality_gap,relative_gap_pct,notes\n";
  auto num = [&](const std::optional<double>& v) {
    if (v) os << format_double(*v);
  };
  for (const auto& r : rows) {
    os << r.instance << ',' << r.seed << ',' << r.n << ',' << r.jobs << ',';
    num(r.gamma);
    os << ',' << r.algorithm << ',';
    num(r.objective_s);
    os << ',';
    num(r.c_max_fict_s);
    os << ',';
    num(r.c_max_actual_s);
    os << ',';
    num(r.runtime_ms);
    os << ',';
    if (r.integral) os << (*r.integral ? 1 : 0);
    os << ',';
    num(r.integrality_gap);
    os << ',';
    num(r.relative_gap_pct);
    os << ',' << r.notes << '\n';
  }
}

}  // namespace dnnsplit
