#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "dnnsplit/costs.hpp"
#include "dnnsplit/format.hpp"
#include "dnnsplit/plan.hpp"
#include "dnnsplit/workload.hpp"

// Evaluators for a fixed routing plan: the fictitious system (each job waits
// for the whole higher-priority backlog on every component it uses) and an
// event-driven preemptive-resume priority simulation of the actual system.

namespace dnnsplit {

enum class ComponentKind : std::uint8_t { node, link };

struct Task {
  ComponentKind kind = ComponentKind::node;
  std::uint32_t component = 0;
  double size = 0.0;      // MM or bits
  double duration = 0.0;  // seconds
};

struct TaskChain {
  std::uint32_t job = 0;
  std::vector<Task> tasks;
};

// Tasks of a path in execution order. Zero-duration tasks are dropped.
inline TaskChain build_task_chain(const PhysicalNetwork& net, const Job& job, const CostModel& cost,
                                  const LayeredPath& path) {
  TaskChain chain{job.id, {}};
  for (const auto& e : path.edges) {
    Task t;
    t.kind = e.is_cross() ? ComponentKind::node : ComponentKind::link;
    t.component = e.component;
    t.size = edge_task(net, job.model, cost, e);
    t.duration = edge_service_time(net, job.model, cost, e);
    if (t.duration > 0.0) chain.tasks.push_back(t);
  }
  return chain;
}

// Completion time of every plan entry (priority order) in the fictitious
// system, starting from `initial` backlog.
inline std::vector<double> fictitious_completion(const Scenario& sc, const RoutePlan& plan,
                                                 const QueueSnapshot& initial) {
  QueueSnapshot q = initial;
  std::vector<double> out;
  for (const auto& e : plan.entries) {
    const auto& job = sc.jobs.at(e.job);
    out.push_back(fictitious_cost(sc.network, job.model, sc.cost, q, e.path));
    add_path_load(sc.network, job.model, sc.cost, e.path, q);
  }
  return out;
}

struct SimEvent {
  enum class Kind : std::uint8_t { start, preempt, resume, finish };
  double time = 0.0;
  ComponentKind kind = ComponentKind::node;
  std::uint32_t component = 0;
  std::int64_t job = 0;  // -1 is the initial backlog
  Kind event = Kind::start;
};

inline const char* to_string(SimEvent::Kind k) {
  switch (k) {
    case SimEvent::Kind::start: return "start";
    case SimEvent::Kind::preempt: return "preempt";
    case SimEvent::Kind::resume: return "resume";
    case SimEvent::Kind::finish: return "finish";
  }
  return "?";
}

inline const char* to_string(ComponentKind k) { return k == ComponentKind::node ? "node" : "link"; }

using EventLog = std::vector<SimEvent>;

inline void write_event_csv(std::ostream& os, const EventLog& log) {
  os << "time_s,component,kind,job,event\n";
  for (const auto& e : log) {
    os << format_double(e.time) << ',' << e.component << ',' << to_string(e.kind) << ',' << e.job << ',' << to_string(e.event)
       << '\n';
  }
}

struct SimResult {
  std::vector<double> completion;  // per plan entry (priority order)
  EventLog log;
  std::vector<double> busy_time;   // per component: nodes then links
};

// Fluid preemptive-resume priority simulation. Every component serves the
// highest-priority task present; initial backlog is the highest priority and
// present at t=0; all jobs are released at t=0.
inline SimResult simulate_actual(const Scenario& sc, const RoutePlan& plan, const QueueSnapshot& initial) {
  const auto& net = sc.network;
  const std::size_t n_nodes = net.node_count();
  const std::size_t n_comp = n_nodes + net.link_count();
  auto comp_index = [&](ComponentKind k, std::uint32_t c) { return k == ComponentKind::node ? c : n_nodes + c; };
  auto comp_kind = [&](std::size_t i) { return i < n_nodes ? ComponentKind::node : ComponentKind::link; };
  auto comp_id = [&](std::size_t i) { return static_cast<std::uint32_t>(i < n_nodes ? i : i - n_nodes); };

  std::vector<TaskChain> chains;
  for (const auto& e : plan.entries) chains.push_back(build_task_chain(net, sc.jobs.at(e.job), sc.cost, e.path));
  const std::size_t J = chains.size();

  // Present work per component keyed by priority slot: 0 = backlog, p+1 = entry p.
  struct Item {
    std::size_t slot;
    double remaining;
    bool started;
  };
  std::vector<std::vector<Item>> present(n_comp);
  std::vector<std::int64_t> serving(n_comp, -1);  // slot in service
  std::vector<std::size_t> next_task(J, 0);

  SimResult res;
  res.completion.assign(J, 0.0);
  res.busy_time.assign(n_comp, 0.0);

  for (NodeId u = 0; u < n_nodes; ++u) {
    double d = node_wait_time(net, initial, u);
    if (d > 0.0 && std::isfinite(d)) present[comp_index(ComponentKind::node, u)].push_back({0, d, false});
  }
  for (LinkId l = 0; l < net.link_count(); ++l) {
    double d = link_wait(net, initial, sc.cost, l);
    if (d > 0.0) present[comp_index(ComponentKind::link, l)].push_back({0, d, false});
  }
  auto arrive = [&](std::size_t p) {
    const auto& t = chains[p].tasks[next_task[p]];
    present[comp_index(t.kind, t.component)].push_back({p + 1, t.duration, false});
  };
  for (std::size_t p = 0; p < J; ++p)
    if (!chains[p].tasks.empty()) arrive(p);

  auto job_of = [](std::size_t slot) { return static_cast<std::int64_t>(slot) - 1; };
  // Same-instant order: finish, preempt, then start and resume.
  auto phase = [](SimEvent::Kind k) {
    switch (k) {
      case SimEvent::Kind::finish: return 0;
      case SimEvent::Kind::preempt: return 1;
      default: return 2;
    }
  };
  using Key = std::tuple<double, int, std::size_t, std::size_t>;
  std::vector<std::pair<Key, SimEvent>> batch;
  auto emit = [&](double t, std::size_t comp, std::size_t slot, SimEvent::Kind k) {
    SimEvent ev{t, comp_kind(comp), comp_id(comp), job_of(slot), k};
    batch.push_back({Key{t, phase(k), slot, comp}, ev});
  };

  double now = 0.0;
  while (true) {
    // Dispatch: each component serves its highest-priority item.
    for (std::size_t c = 0; c < n_comp; ++c) {
      auto& items = present[c];
      std::int64_t best = -1;
      for (std::size_t i = 0; i < items.size(); ++i)
        if (best < 0 || items[i].slot < items[static_cast<std::size_t>(best)].slot) best = static_cast<std::int64_t>(i);
      std::int64_t slot = best < 0 ? -1 : static_cast<std::int64_t>(items[static_cast<std::size_t>(best)].slot);
      if (slot == serving[c]) continue;
      if (serving[c] >= 0) emit(now, c, static_cast<std::size_t>(serving[c]), SimEvent::Kind::preempt);
      if (best >= 0) {
        auto& it = items[static_cast<std::size_t>(best)];
        emit(now, c, it.slot, it.started ? SimEvent::Kind::resume : SimEvent::Kind::start);
        it.started = true;
      }
      serving[c] = slot;
    }
    std::sort(batch.begin(), batch.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& b : batch) res.log.push_back(b.second);
    batch.clear();

    // Next completion.
    double dt = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_comp; ++c) {
      if (serving[c] < 0) continue;
      for (const auto& it : present[c])
        if (static_cast<std::int64_t>(it.slot) == serving[c]) dt = std::min(dt, it.remaining);
    }
    if (!std::isfinite(dt)) break;
    const double t_next = now + dt;

    std::vector<std::size_t> finished_slots;
    for (std::size_t c = 0; c < n_comp; ++c) {
      if (serving[c] < 0) continue;
      auto& items = present[c];
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (static_cast<std::int64_t>(items[i].slot) != serving[c]) continue;
        res.busy_time[c] += std::min(dt, items[i].remaining);
        items[i].remaining -= dt;
        if (items[i].remaining <= 1e-12 * std::max(1.0, t_next)) {
          emit(t_next, c, items[i].slot, SimEvent::Kind::finish);
          finished_slots.push_back(items[i].slot);
          items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
          serving[c] = -1;
        }
        break;
      }
    }
    now = t_next;
    std::sort(finished_slots.begin(), finished_slots.end());
    for (auto slot : finished_slots) {
      if (slot == 0) continue;
      const std::size_t p = slot - 1;
      if (++next_task[p] < chains[p].tasks.size())
        arrive(p);
      else
        res.completion[p] = now;
    }
  }
  return res;
}

// Fills c_fict_s and c_actual_s of every entry.
inline void evaluate_plan(const Scenario& sc, RoutePlan& plan, const QueueSnapshot& initial) {
  auto f = fictitious_completion(sc, plan, initial);
  auto a = simulate_actual(sc, plan, initial);
  for (std::size_t p = 0; p < plan.entries.size(); ++p) {
    plan.entries[p].c_fict_s = f[p];
    plan.entries[p].c_actual_s = a.completion[p];
  }
}

}  // namespace dnnsplit
