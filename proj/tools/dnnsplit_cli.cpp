#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dnnsplit/dnnsplit.hpp"

using namespace dnnsplit;

namespace {

struct ScenarioArgs {
  std::string scenario_file;
  std::uint64_t seed = 1;
  std::size_t nodes = 15;
  std::size_t jobs = 3;
  double gamma = 1.0;
  std::optional<double> side_m;
  bool symmetric = false;
  bool zero_delay = false;
  std::optional<double> mem_slowdown;

  void add_to(CLI::App* app) {
    app->add_option("--scenario", scenario_file, "Scenario JSON file (otherwise one is generated)");
    app->add_option("--seed", seed, "Generator seed");
    app->add_option("--nodes", nodes, "Number of nodes")->check(CLI::Range(2, 1000000));
    app->add_option("--jobs", jobs, "Number of jobs")->check(CLI::Range(1, 1000000));
    app->add_option("--gamma", gamma, "Link rate scale")->check(CLI::PositiveNumber);
    app->add_option("--side-m", side_m, "Side of the placement square in meters");
    app->add_flag("--symmetric", symmetric, "Same rate in both directions of a link pair");
    app->add_flag("--zero-delay", zero_delay, "Ignore transmission and link waiting");
    app->add_option("--mem-slowdown", mem_slowdown, "Compute slowdown factor when memory is exceeded");
  }

  Scenario load() const {
    Scenario sc;
    if (!scenario_file.empty()) {
      sc = io::load_scenario(scenario_file);
    } else {
      ScenarioParams p;
      p.nodes = nodes;
      p.jobs = jobs;
      p.gamma = gamma;
      p.seed = seed;
      p.side_m = side_m;
      p.symmetric_rates = symmetric;
      sc = generate_scenario(p);
    }
    if (zero_delay) sc.cost.zero_network_delay = true;
    if (mem_slowdown) sc.cost.mem_slowdown = mem_slowdown;
    return sc;
  }
};

struct OutputArgs {
  std::string out;
  std::string format = "json";

  void add_to(CLI::App* app, const std::string& default_format) {
    format = default_format;
    app->add_option("--out", out, "Output file (default stdout)");
    app->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  }

  void emit(const std::string& text) const {
    if (out.empty())
      std::cout << text;
    else
      io::write_text(out, text);
  }
};

std::string num(double v) { return format_double(v); }

std::string plan_csv(const RoutePlan& plan) {
  std::ostringstream os;
  os << "job,priority,c_fict_s,c_actual_s,simple\n";
  for (const auto& e : plan.entries)
    os << e.job << ',' << e.priority << ',' << num(e.c_fict_s) << ',' << (e.c_actual_s ? num(*e.c_actual_s) : "")
       << ',' << (e.simple ? 1 : 0) << '\n';
  return os.str();
}

std::string plan_json(const Scenario& sc, const RoutePlan& plan) {
  io::Json j;
  j["plan"] = io::to_json(sc.network, plan);
  j["c_max_fict_s"] = plan.c_max_fict();
  j["c_max_actual_s"] = plan.c_max_actual() ? io::Json(*plan.c_max_actual()) : io::Json(nullptr);
  j["diagnostics"] = plan.diagnostics;
  return j.dump(2) + "\n";
}

RoutePlan ordered_plan(const Scenario& sc, const std::function<LayeredPath(const Job&, const QueueSnapshot&)>& f) {
  return verify::in_order_plan(sc, f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint DNN layer placement and routing: formulations, policies and simulation"};
  app.require_subcommand(1);

  // gen-scenario
  auto* gen = app.add_subcommand("gen-scenario", "Generate a random scenario");
  ScenarioArgs gen_sc;
  OutputArgs gen_out;
  gen_sc.add_to(gen);
  gen_out.add_to(gen, "json");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve the service-time program");
  ScenarioArgs solve_sc;
  OutputArgs solve_out;
  std::string formulation = "service-ilp";
  std::string budgets = "on";
  double delta = 1e-6;
  long long time_limit_ms = 10000;
  solve_sc.add_to(solve);
  solve_out.add_to(solve, "json");
  solve->add_option("--formulation", formulation, "Program to solve")
      ->check(CLI::IsMember({"service-ilp", "lp-relax"}));
  solve->add_option("--budgets", budgets, "Compute and memory budget rows")->check(CLI::IsMember({"on", "off"}));
  solve->add_option("--delta", delta, "Per-edge anti-cycle penalty in seconds");
  solve->add_option("--time-limit-ms", time_limit_ms, "Branch-and-bound time limit");
  std::size_t node_limit = 0;
  solve->add_option("--node-limit", node_limit, "Branch-and-bound node limit (0: unlimited)");
  std::string solve_mps;
  solve->add_option("--mps", solve_mps, "Also write the program in MPS format");

  // route
  auto* route = app.add_subcommand("route", "Route all jobs with a policy");
  ScenarioArgs route_sc;
  OutputArgs route_out;
  std::string policy = "greedy";
  std::string system = "fictitious";
  double route_delta = 1e-6;
  route_sc.add_to(route);
  route_out.add_to(route, "json");
  route->add_option("--policy", policy, "Routing policy")
      ->check(CLI::IsMember({"greedy", "nfs", "ss", "sw", "opt", "baseline"}));
  route->add_option("--system", system, "System optimized by opt")->check(CLI::IsMember({"fictitious", "actual"}));
  route->add_option("--delta", route_delta, "Per-edge anti-cycle penalty in seconds");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate a plan in the actual system");
  ScenarioArgs sim_sc;
  OutputArgs sim_out;
  std::string plan_file, events_file;
  sim_sc.add_to(simulate);
  sim_out.add_to(simulate, "csv");
  simulate->add_option("--plan", plan_file, "Plan JSON (from route); default: greedy plan");
  simulate->add_option("--events", events_file, "Write the event log CSV here");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a seeded parameter sweep");
  ExperimentConfig cfg;
  OutputArgs exp_out;
  std::string exp_budgets = "on";
  long long exp_time_limit_ms = 10000;
  exp_out.add_to(experiment, "csv");
  experiment->add_option("--nodes", cfg.nodes, "Node counts")->delimiter(',');
  experiment->add_option("--jobs", cfg.jobs, "Job counts")->delimiter(',');
  experiment->add_option("--gamma", cfg.gammas, "Link rate scales")->delimiter(',');
  experiment->add_option("--instances", cfg.instances, "Instances per cell");
  experiment->add_option("--seed", cfg.seed, "Base seed");
  experiment->add_option("--algorithms", cfg.algorithms, "Algorithms to run")->delimiter(',');
  experiment->add_option("--time-limit-ms", exp_time_limit_ms, "Branch-and-bound time limit per instance");
  experiment->add_option("--node-limit", cfg.node_limit, "Branch-and-bound node limit per instance (0: unlimited)");
  experiment->add_option("--budgets", exp_budgets, "Budget rows in the ILP")->check(CLI::IsMember({"on", "off"}));
  experiment->add_option("--delta", cfg.delta, "Per-edge anti-cycle penalty in seconds");
  experiment->add_option("--threads", cfg.threads, "Worker threads (0: DNNSPLIT_THREADS or all cores)");
  experiment->add_flag("--record-runtime", cfg.record_runtime, "Fill runtime_ms (output no longer reproducible)");
  experiment->add_flag("--symmetric", cfg.symmetric_rates, "Same rate in both directions of a link pair");
  experiment->add_flag("--zero-delay", cfg.zero_network_delay, "Ignore transmission and link waiting");

  // verify
  auto* ver = app.add_subcommand("verify", "Run invariant suites");
  std::string suite = "all";
  verify::SuiteOptions vopt;
  std::vector<std::string> suite_choices = verify::suite_names();
  suite_choices.push_back("all");
  ver->add_option("--suite", suite, "Suite name")->check(CLI::IsMember(suite_choices));
  ver->add_option("--instances", vopt.instances, "Instances (0: suite default)");
  ver->add_option("--seed", vopt.seed, "Base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto sc = gen_sc.load();
      if (gen_out.format != "json") throw Error("gen-scenario writes JSON only");
      gen_out.emit(io::to_json(sc).dump(2) + "\n");
      return 0;
    }

    if (*solve) {
      auto sc = solve_sc.load();
      FormulationOptions fo;
      fo.delta = delta;
      fo.budgets = budgets == "on";
      fo.relax = formulation == "lp-relax";
      auto prog = build_service_ilp(sc, fo);
      if (!solve_mps.empty()) {
        std::ofstream mps(solve_mps);
        lp::write_mps(mps, prog.lp, formulation);
      }
      lp::LpSolution s;
      if (fo.relax) {
        s = lp::solve_lp(prog.lp);
      } else {
        lp::BranchAndBoundOptions bo;
        bo.time_limit = std::chrono::milliseconds(time_limit_ms);
        bo.node_limit = node_limit;
        s = lp::solve_ilp(prog.lp, bo);
      }
      const bool integral = s.has_solution() && std::all_of(s.x.begin(), s.x.end(), [](double v) {
                              return std::abs(v - std::round(v)) <= 1e-6;
                            });
      std::optional<RoutePlan> plan;
      if (s.has_solution() && integral) {
        std::vector<LayeredPath> paths;
        for (std::size_t j = 0; j < sc.jobs.size(); ++j) paths.push_back(extract_path(prog, s.x, j));
        plan = plan_in_job_order(sc, std::move(paths));
      }
      if (solve_out.format == "csv") {
        std::ostringstream os;
        os << "formulation,status,objective_s,raw_objective_s,integral,nodes\n";
        os << formulation << ',' << lp::to_string(s.status) << ',' << (s.has_solution() ? num(s.objective) : "")
           << ',' << (s.has_solution() ? num(prog.raw_objective(s.x)) : "") << ',' << (integral ? 1 : 0) << ','
           << s.nodes << '\n';
        solve_out.emit(os.str());
      } else {
        io::Json j;
        j["formulation"] = formulation;
        j["status"] = lp::to_string(s.status);
        j["objective_s"] = s.has_solution() ? io::Json(s.objective) : io::Json(nullptr);
        j["raw_objective_s"] = s.has_solution() ? io::Json(prog.raw_objective(s.x)) : io::Json(nullptr);
        j["integral"] = integral;
        j["branch_nodes"] = s.nodes;
        j["plan"] = plan ? io::to_json(sc.network, *plan) : io::Json(nullptr);
        solve_out.emit(j.dump(2) + "\n");
      }
      return s.status == lp::Status::optimal ? 0 : 2;
    }

    if (*route) {
      auto sc = route_sc.load();
      const auto q0 = QueueSnapshot::from_network(sc.network);
      PolicyOptions po;
      po.delta = route_delta;
      RoutePlan plan;
      if (policy == "greedy") {
        plan = greedy_route(sc, po);
      } else if (policy == "nfs") {
        plan = nfs_route(sc);
      } else if (policy == "ss") {
        plan = ordered_plan(sc, [&](const Job& j, const QueueSnapshot&) {
          return shortest_service_route(sc.network, j, sc.cost, po).path;
        });
      } else if (policy == "sw") {
        plan = ordered_plan(sc, [&](const Job& j, const QueueSnapshot& q) { return sw_route(sc, j, q).path; });
      } else if (policy == "baseline") {
        plan = ordered_plan(sc, [&](const Job& j, const QueueSnapshot&) {
          return assignment_baseline_route(sc.network, j, sc.cost).path;
        });
      } else {
        plan = brute_force_opt(sc, system == "actual" ? EvalSystem::actual : EvalSystem::fictitious, q0);
      }
      evaluate_plan(sc, plan, q0);
      route_out.emit(route_out.format == "csv" ? plan_csv(plan) : plan_json(sc, plan));
      return 0;
    }

    if (*simulate) {
      auto sc = sim_sc.load();
      const auto q0 = QueueSnapshot::from_network(sc.network);
      RoutePlan plan;
      if (plan_file.empty()) {
        plan = greedy_route(sc);
      } else {
        auto j = io::parse(io::read_text(plan_file));
        plan = io::plan_from_json(sc, j.is_object() ? j.at("plan") : j);
      }
      auto res = simulate_actual(sc, plan, q0);
      evaluate_plan(sc, plan, q0);
      if (!events_file.empty()) {
        std::ofstream ev(events_file, std::ios::binary);
        write_event_csv(ev, res.log);
      }
      sim_out.emit(sim_out.format == "csv" ? plan_csv(plan) : plan_json(sc, plan));
      return 0;
    }

    if (*experiment) {
      cfg.budgets = exp_budgets == "on";
      cfg.time_limit = std::chrono::milliseconds(exp_time_limit_ms);
      auto rows = run_experiment(cfg);
      std::ostringstream os;
      if (exp_out.format == "csv") {
        write_results_csv(os, rows);
      } else {
        io::Json arr = io::Json::array();
        for (const auto& r : rows) {
          io::Json o;
          auto opt = [](const std::optional<double>& v) { return v ? io::Json(*v) : io::Json(nullptr); };
          o["instance"] = r.instance;
          o["seed"] = r.seed;
          o["n"] = r.n;
          o["J"] = r.jobs;
          o["gamma"] = r.gamma;
          o["algorithm"] = r.algorithm;
          o["objective_s"] = opt(r.objective_s);
          o["c_max_fict_s"] = opt(r.c_max_fict_s);
          o["c_max_actual_s"] = opt(r.c_max_actual_s);
          o["runtime_ms"] = opt(r.runtime_ms);
          o["integral"] = r.integral ? io::Json(*r.integral) : io::Json(nullptr);
          o["integrality_gap"] = opt(r.integrality_gap);
          o["relative_gap_pct"] = opt(r.relative_gap_pct);
          o["notes"] = r.notes;
          arr.push_back(std::move(o));
        }
        os << arr.dump(2) << "\n";
      }
      exp_out.emit(os.str());
      return 0;
    }

    if (*ver) {
      std::vector<std::string> suites = suite == "all" ? verify::suite_names() : std::vector<std::string>{suite};
      bool ok = true;
      for (const auto& name : suites) {
        auto r = verify::run_suite(name, vopt);
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.suite << ": " << r.summary << " (" << r.checked
                  << " checked, " << r.skipped << " skipped)\n";
        if (!r.passed()) {
          ok = false;
          if (r.counterexample) std::cout << *r.counterexample << "\n";
          break;
        }
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
