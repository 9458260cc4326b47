#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dnnsplit/costs.hpp"
#include "dnnsplit/formulations.hpp"
#include "dnnsplit/io.hpp"
#include "dnnsplit/linprog.hpp"
#include "dnnsplit/policies.hpp"
#include "dnnsplit/sim.hpp"
#include "dnnsplit/tu_check.hpp"
#include "dnnsplit/workload.hpp"

// Randomized invariant suites and the instance generators they draw from.

namespace dnnsplit::verify {

// ---------------------------------------------------------------------------
// Instance generators

struct InstanceOptions {
  std::size_t min_nodes = 2;
  std::size_t max_nodes = 5;
  std::size_t min_jobs = 1;
  std::size_t max_jobs = 3;
  std::uint32_t max_layers = 3;  // models are truncated to at most this many layers
  std::vector<double> gammas{0.2, 0.5, 1.0, 2.0};
  bool distinct_endpoints = false;
  bool zero_network_delay = false;
  bool identical_capacity = false;
  bool random_queues = false;
};

// Node backlog up to 3000 MM, link backlog up to 2e7 bits.
inline void randomize_queues(PhysicalNetwork& net, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> qn(0.0, 3000.0), ql(0.0, 2e7);
  for (NodeId u = 0; u < net.node_count(); ++u) net.node(u).q_mm = qn(rng);
  for (LinkId e = 0; e < net.link_count(); ++e) net.link(e).q_bits = ql(rng);
}

inline Scenario random_instance(std::uint64_t seed, const InstanceOptions& opt) {
  std::mt19937_64 rng(derive_seed(seed, {7}));
  ScenarioParams p;
  p.nodes = std::uniform_int_distribution<std::size_t>(opt.min_nodes, opt.max_nodes)(rng);
  p.jobs = std::uniform_int_distribution<std::size_t>(opt.min_jobs, opt.max_jobs)(rng);
  p.gamma = opt.gammas[std::uniform_int_distribution<std::size_t>(0, opt.gammas.size() - 1)(rng)];
  p.seed = seed;
  Scenario sc = generate_scenario(p);
  for (auto& job : sc.jobs) {
    const auto L = std::min(opt.max_layers, job.model.layers());
    const auto keep = std::uniform_int_distribution<std::uint32_t>(1, L)(rng);
    if (keep < job.model.layers()) job.model = truncate_model(job.model, keep);
    if (opt.distinct_endpoints)
      while (job.destination == job.source)
        job.destination = std::uniform_int_distribution<NodeId>(0, static_cast<NodeId>(p.nodes - 1))(rng);
  }
  if (opt.identical_capacity) {
    const auto rp3 = make_node(builtin_node_types()[2]);
    for (NodeId u = 0; u < sc.network.node_count(); ++u) {
      auto pos = sc.network.node(u).pos;
      sc.network.node(u) = rp3;
      sc.network.node(u).pos = pos;
    }
  }
  sc.cost.zero_network_delay = opt.zero_network_delay;
  if (opt.random_queues) randomize_queues(sc.network, rng);
  return sc;
}

// One job on n in [min_nodes, max_nodes] with the full model `model_index`
// (0 SLN, 1 AN, 2 RN) and random backlog.
inline Scenario single_job_instance(std::uint64_t seed, std::size_t min_nodes, std::size_t max_nodes,
                                    std::size_t model_index) {
  std::mt19937_64 rng(derive_seed(seed, {11}));
  ScenarioParams p;
  p.nodes = std::uniform_int_distribution<std::size_t>(min_nodes, max_nodes)(rng);
  p.jobs = 1;
  const double gammas[] = {0.2, 0.5, 1.0, 2.0};
  p.gamma = gammas[std::uniform_int_distribution<int>(0, 3)(rng)];
  p.seed = seed;
  Scenario sc = generate_scenario(p);
  sc.jobs[0].model = builtin_models()[model_index % 3];
  randomize_queues(sc.network, rng);
  return sc;
}

// ---------------------------------------------------------------------------
// Suites

struct SuiteOptions {
  std::size_t instances = 0;  // 0: suite default
  std::uint64_t seed = 1;
};

struct SuiteReport {
  std::string suite;
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::size_t skipped = 0;
  std::optional<double> metric;  // suite-specific summary, e.g. a mean gap
  std::string metric_name;
  double seconds = 0.0;
  std::string summary;
  std::optional<std::string> counterexample;  // JSON

  bool passed() const { return failures == 0 && checked > 0; }
};

namespace detail {

class Recorder {
 public:
  explicit Recorder(std::string name) : t0_(std::chrono::steady_clock::now()) { r_.suite = std::move(name); }

  void pass() { ++r_.checked; }
  void fail(const std::string& why, const io::Json& witness) {
    ++r_.checked;
    ++r_.failures;
    if (!r_.counterexample) {
      io::Json j;
      j["reason"] = why;
      j["instance"] = witness;
      r_.counterexample = j.dump();
    }
  }
  void skip() { ++r_.skipped; }
  SuiteReport finish(std::string summary) {
    r_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    r_.summary = std::move(summary);
    return r_;
  }
  SuiteReport& report() { return r_; }

 private:
  SuiteReport r_;
  std::chrono::steady_clock::time_point t0_;
};

inline std::size_t count_or(const SuiteOptions& o, std::size_t fallback) { return o.instances ? o.instances : fallback; }

inline std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

}  // namespace detail

// Relaxed single-job programs have integral optima.
inline SuiteReport integrality_suite(const SuiteOptions& opt = {}) {
  detail::Recorder rec("integrality");
  const auto N = detail::count_or(opt, 1000);
  for (std::size_t i = 0; i < N; ++i) {
    auto sc = single_job_instance(derive_seed(opt.seed, {101, i}), 5, 30, i % 3);
    FormulationOptions fo;
    fo.relax = true;
    auto prog = build_single_job_lp(sc.network, sc.jobs[0], QueueSnapshot::from_network(sc.network), sc.cost, fo);
    auto s = lp::solve_lp(prog.lp);
    if (s.status != lp::Status::optimal) {
      rec.fail(std::string("status ") + lp::to_string(s.status), io::to_json(sc));
    } else if (!lp::is_integral(prog.lp, s.x, 1e-6)) {
      rec.fail("fractional optimum", io::to_json(sc));
    } else {
      rec.pass();
    }
  }
  auto& r = rec.report();
  return rec.finish(std::to_string(r.checked - r.failures) + "/" + std::to_string(r.checked) + " integral");
}

// Constraint matrices of single-job programs on small instances are TU.
inline SuiteReport tu_suite(const SuiteOptions& opt = {}) {
  detail::Recorder rec("tu");
  const auto N = detail::count_or(opt, 40);
  std::size_t i = 0;
  for (std::size_t k = 0; rec.report().checked < N; ++k) {
    InstanceOptions io_opt;
    io_opt.min_nodes = 2;
    io_opt.max_nodes = 4;
    io_opt.max_jobs = 1;
    io_opt.max_layers = 2;
    io_opt.random_queues = true;
    auto sc = random_instance(derive_seed(opt.seed, {202, k}), io_opt);
    // Every third instance gets a node that cannot compute.
    if (k % 3 == 2) sc.network.node(0).mu_mm_s = 0.0;
    try {
      require_routable(sc.network, sc.jobs[0]);
    } catch (const InfeasibleTopology&) {
      rec.skip();
      continue;
    }
    FormulationOptions fo;
    fo.relax = true;
    auto prog = build_single_job_lp(sc.network, sc.jobs[0], QueueSnapshot::from_network(sc.network), sc.cost, fo);
    lp::TuOptions to;
    to.seed = derive_seed(opt.seed, {203, i++});
    auto a = lp::constraint_matrix(prog.lp);
    auto v1 = lp::check_totally_unimodular(a, to);
    auto v2 = lp::check_totally_unimodular(lp::append_identity(a), to);
    if (v1.violated)
      rec.fail("[A1;A2] has a submatrix with determinant " + std::to_string(v1.det), io::to_json(sc));
    else if (v2.violated)
      rec.fail("[A I] has a submatrix with determinant " + std::to_string(v2.det), io::to_json(sc));
    else
      rec.pass();
  }
  auto& r = rec.report();
  return rec.finish(std::to_string(r.failures) + " violations over " + std::to_string(r.checked) + " instances");
}

// The relaxed objective equals the fictitious cost of the extracted path
// whenever the path is physically simple.
inline SuiteReport lemma1_suite(const SuiteOptions& opt = {}) {
  detail::Recorder rec("lemma1");
  const auto N = detail::count_or(opt, 500);
  double worst = 0.0;
  for (std::size_t i = 0; rec.report().checked < N; ++i) {
    auto sc = single_job_instance(derive_seed(opt.seed, {303, i}), 5, 20, i % 3);
    const auto q = QueueSnapshot::from_network(sc.network);
    FormulationOptions fo;
    fo.relax = true;
    auto prog = build_single_job_lp(sc.network, sc.jobs[0], q, sc.cost, fo);
    auto s = lp::solve_lp(prog.lp);
    if (s.status != lp::Status::optimal) {
      rec.fail(std::string("status ") + lp::to_string(s.status), io::to_json(sc));
      continue;
    }
    auto path = extract_path(prog, s.x);
    if (!is_simple_in_physical(sc.network, path)) {
      rec.skip();
      continue;
    }
    const double diff = std::abs(prog.raw_objective(s.x) - fictitious_cost(sc.network, sc.jobs[0].model, sc.cost, q, path));
    worst = std::max(worst, diff);
    if (diff > 1e-9)
      rec.fail("objective differs from fictitious cost by " + detail::fmt(diff), io::to_json(sc));
    else
      rec.pass();
  }
  rec.report().metric = worst;
  rec.report().metric_name = "max |diff| s";
  return rec.finish("max difference " + detail::fmt(worst) + " s");
}

// Greedy against the exhaustive optimum in the fictitious system.
inline SuiteReport greedy_opt_suite(const SuiteOptions& opt = {}, double max_mean_gap = 0.10) {
  detail::Recorder rec("greedy-opt");
  const auto N = detail::count_or(opt, 200);
  double sum = 0.0, worst = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; n < N; ++i) {
    InstanceOptions io_opt;
    auto sc = random_instance(derive_seed(opt.seed, {404, i}), io_opt);
    RoutePlan best;
    try {
      best = brute_force_opt(sc, EvalSystem::fictitious, QueueSnapshot::from_network(sc.network));
    } catch (const SizeLimit&) {
      rec.skip();
      continue;
    }
    auto g = greedy_route(sc);
    const double c_opt = best.c_max_fict(), c_grd = g.c_max_fict();
    const double gap = (c_grd - c_opt) / c_opt;
    sum += gap;
    worst = std::max(worst, gap);
    ++n;
    if (c_grd < c_opt - 1e-9)
      rec.fail("greedy beats the exhaustive optimum", io::to_json(sc));
    else
      rec.pass();
  }
  const double mean = n ? sum / static_cast<double>(n) : 0.0;
  rec.report().metric = mean;
  rec.report().metric_name = "mean gap";
  if (mean > max_mean_gap) {
    ++rec.report().failures;
    if (!rec.report().counterexample) rec.report().counterexample = R"({"reason":"mean gap above limit"})";
  }
  return rec.finish("mean gap " + detail::fmt(mean * 100.0) + "%, max " + detail::fmt(worst * 100.0) + "%");
}

// Zero network delay and identical compute rates: greedy in the actual
// system is within 2 - 1/|V+| of the exhaustive actual optimum.
inline SuiteReport corollary1_suite(const SuiteOptions& opt = {}) {
  detail::Recorder rec("corollary1");
  const auto N = detail::count_or(opt, 100);
  double worst_ratio = 0.0;
  for (std::size_t i = 0; rec.report().checked < N; ++i) {
    InstanceOptions io_opt;
    io_opt.zero_network_delay = true;
    io_opt.identical_capacity = true;
    auto sc = random_instance(derive_seed(opt.seed, {505, i}), io_opt);
    const auto q = QueueSnapshot::from_network(sc.network);
    RoutePlan t_star;
    try {
      t_star = brute_force_opt(sc, EvalSystem::actual, q);
    } catch (const SizeLimit&) {
      rec.skip();
      continue;
    }
    auto g = greedy_route(sc);
    evaluate_plan(sc, g, q);
    const double v = static_cast<double>(positive_components(sc.network, sc.cost).nodes);
    const double bound = (2.0 - 1.0 / v) * *t_star.c_max_actual();
    worst_ratio = std::max(worst_ratio, *g.c_max_actual() / *t_star.c_max_actual());
    if (*g.c_max_actual() > bound + 1e-9)
      rec.fail("greedy exceeds (2 - 1/|V|) T*", io::to_json(sc));
    else
      rec.pass();
  }
  rec.report().metric = worst_ratio;
  rec.report().metric_name = "max C_grd/T*";
  return rec.finish("max ratio " + detail::fmt(worst_ratio));
}

// C_fict(last greedy job) <= a3 * (sum_{p<J} S_SS / (|V+|+|E+|) + S_SS(last))
// on instances whose greedy paths are all simple.
inline SuiteReport proof_chain_suite(const SuiteOptions& opt = {}) {
  detail::Recorder rec("proof-chain");
  const auto N = detail::count_or(opt, 100);
  double worst_ratio = 0.0;
  for (std::size_t i = 0; rec.report().checked < N; ++i) {
    InstanceOptions io_opt;
    io_opt.min_nodes = 3;
    io_opt.max_nodes = 10;
    io_opt.min_jobs = 2;
    io_opt.max_jobs = 5;
    io_opt.max_layers = 9;
    io_opt.distinct_endpoints = true;
    auto sc = random_instance(derive_seed(opt.seed, {606, i}), io_opt);
    auto g = greedy_route(sc);
    if (!g.all_simple()) {
      rec.skip();
      continue;
    }
    auto a = compute_alpha(sc);
    const double ve = static_cast<double>(a.v_pos + a.e_pos);
    double sum_prefix = 0.0;
    for (std::size_t p = 0; p + 1 < g.entries.size(); ++p)
      sum_prefix += shortest_service_route(sc.network, sc.jobs[g.entries[p].job], sc.cost).service_s;
    const double s_last = shortest_service_route(sc.network, sc.jobs[g.entries.back().job], sc.cost).service_s;
    const double rhs = a.alpha3 * (sum_prefix / ve + s_last);
    const double lhs = g.entries.back().c_fict_s;
    worst_ratio = std::max(worst_ratio, lhs / rhs);
    if (lhs > rhs + 1e-9)
      rec.fail("last greedy job exceeds the proof-chain bound", io::to_json(sc));
    else
      rec.pass();
  }
  rec.report().metric = worst_ratio;
  rec.report().metric_name = "max lhs/rhs";
  return rec.finish("max lhs/rhs " + detail::fmt(worst_ratio));
}

// Policies routed one job at a time in id order; used to broaden dominance
// coverage beyond the ranking policies.
inline RoutePlan in_order_plan(const Scenario& sc, const std::function<LayeredPath(const Job&, const QueueSnapshot&)>& route) {
  RoutePlan plan;
  QueueSnapshot q = QueueSnapshot::from_network(sc.network);
  for (const auto& job : sc.jobs) {
    RouteEntry e;
    e.job = job.id;
    e.priority = job.id;
    e.path = route(job, q);
    e.simple = is_simple_in_physical(sc.network, e.path);
    add_path_load(sc.network, job.model, sc.cost, e.path, q);
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

// Every job of every policy finishes no later in the actual system than in
// the fictitious one.
inline SuiteReport dominance_suite(const SuiteOptions& opt = {}) {
  detail::Recorder rec("dominance");
  const auto N = detail::count_or(opt, 500);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    InstanceOptions io_opt;
    io_opt.max_nodes = i % 4 == 0 ? 5 : 12;
    io_opt.max_jobs = i % 4 == 0 ? 3 : 5;
    io_opt.max_layers = i % 4 == 0 ? 2 : 9;
    io_opt.random_queues = i % 2 == 1;
    io_opt.zero_network_delay = i % 7 == 3;
    auto sc = random_instance(derive_seed(opt.seed, {707, i}), io_opt);
    const auto q0 = QueueSnapshot::from_network(sc.network);

    std::vector<std::pair<std::string, RoutePlan>> plans;
    plans.emplace_back("greedy", greedy_route(sc));
    plans.emplace_back("nfs", nfs_route(sc));
    plans.emplace_back("ss", in_order_plan(sc, [&](const Job& j, const QueueSnapshot&) {
                         return shortest_service_route(sc.network, j, sc.cost).path;
                       }));
    plans.emplace_back("sw", in_order_plan(sc, [&](const Job& j, const QueueSnapshot& q) {
                         return sw_route(sc, j, q).path;
                       }));
    plans.emplace_back("baseline", in_order_plan(sc, [&](const Job& j, const QueueSnapshot&) {
                         return assignment_baseline_route(sc.network, j, sc.cost).path;
                       }));
    if (i % 4 == 0) {
      try {
        plans.emplace_back("opt", brute_force_opt(sc, EvalSystem::fictitious, q0));
      } catch (const SizeLimit&) {
      }
    }
    bool ok = true;
    std::string why;
    for (auto& [name, plan] : plans) {
      evaluate_plan(sc, plan, q0);
      for (const auto& e : plan.entries) {
        const double d = *e.c_actual_s - e.c_fict_s;
        worst = std::max(worst, d);
        if (d > 1e-9 && ok) {
          ok = false;
          why = name + ": job " + std::to_string(e.job) + " actual exceeds fictitious by " + detail::fmt(d);
        }
      }
    }
    if (ok)
      rec.pass();
    else
      rec.fail(why, io::to_json(sc));
  }
  rec.report().metric = worst;
  rec.report().metric_name = "max C_actual - C_fict";
  return rec.finish("max C_actual - C_fict " + detail::fmt(worst) + " s");
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"integrality", "tu",         "lemma1",     "dominance",
                                              "greedy-opt",  "corollary1", "proof-chain"};
  return names;
}

inline SuiteReport run_suite(const std::string& name, const SuiteOptions& opt = {}) {
  if (name == "integrality") return integrality_suite(opt);
  if (name == "tu") return tu_suite(opt);
  if (name == "lemma1") return lemma1_suite(opt);
  if (name == "dominance") return dominance_suite(opt);
  if (name == "greedy-opt") return greedy_opt_suite(opt);
  if (name == "corollary1") return corollary1_suite(opt);
  if (name == "proof-chain") return proof_chain_suite(opt);
  throw Error("unknown suite " + name);
}

}  // namespace dnnsplit::verify
