#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "test_util.hpp"

using namespace dnnsplit;
using namespace dnnsplit::verify;
using namespace testutil;

namespace {

RouteEntry entry(std::uint32_t job, std::uint32_t priority, LayeredPath path) {
  RouteEntry e;
  e.job = job;
  e.priority = priority;
  e.path = std::move(path);
  return e;
}

// Job j through the diamond computing at `u` (1 or 2).
LayeredPath diamond_path(const Scenario& sc, NodeId u) {
  const auto& net = sc.network;
  PhysicalPlan plan{{u}, {{*net.find_link(0, u)}, {*net.find_link(u, 3)}}};
  return lift_to_layered(net, plan, 0, 3);
}

// Two nodes: 0 cannot compute, 1 computes; links at 1 MB/s.
Scenario chain(std::size_t jobs, double c_mm) {
  Scenario sc;
  sc.network.add_node(node(0.0));
  sc.network.add_node(node(1.0));
  both_ways(sc.network, 0, 1, mb_per_s(1.0));
  for (std::uint32_t j = 0; j < jobs; ++j) {
    Job job;
    job.id = j;
    job.model = one_layer(c_mm, 1000.0, 1000.0);
    job.source = 0;
    job.destination = 0;
    sc.jobs.push_back(job);
  }
  return sc;
}

LayeredPath chain_path(const Scenario& sc) {
  PhysicalPlan plan{{1}, {{0}, {1}}};
  return lift_to_layered(sc.network, plan, 0, 0);
}

}  // namespace

TEST(TaskChain, FollowsPathOrder) {
  auto sc = diamond();
  auto chain = build_task_chain(sc.network, sc.jobs[0], sc.cost, diamond_path(sc, 1));
  ASSERT_EQ(chain.tasks.size(), 3u);
  EXPECT_EQ(chain.tasks[0].kind, ComponentKind::link);
  EXPECT_EQ(chain.tasks[1].kind, ComponentKind::node);
  EXPECT_EQ(chain.tasks[1].component, 1u);
  EXPECT_DOUBLE_EQ(chain.tasks[1].size, 10.0);
  EXPECT_NEAR(chain.tasks[0].duration, 0.1, 1e-12);
  EXPECT_NEAR(chain.tasks[1].duration, 1.0, 1e-12);
}

TEST(Fictitious, SingleJobIsServiceTime) {
  auto sc = diamond();
  sc.jobs.pop_back();
  RoutePlan plan;
  plan.entries.push_back(entry(0, 0, diamond_path(sc, 2)));
  auto q = QueueSnapshot::zeros(sc.network);
  auto f = fictitious_completion(sc, plan, q);
  EXPECT_NEAR(f[0], 2.2, 1e-12);
  EXPECT_NEAR(f[0], path_service_time(sc.network, sc.jobs[0].model, sc.cost, plan.entries[0].path), 1e-15);
  EXPECT_NEAR(simulate_actual(sc, plan, q).completion[0], 2.2, 1e-12);
}

TEST(Fictitious, DiamondSplit) {
  auto sc = diamond();
  RoutePlan plan;
  plan.entries.push_back(entry(0, 0, diamond_path(sc, 1)));
  plan.entries.push_back(entry(1, 1, diamond_path(sc, 2)));
  auto q = QueueSnapshot::zeros(sc.network);
  auto f = fictitious_completion(sc, plan, q);
  EXPECT_NEAR(f[0], 1.2, 1e-12);
  EXPECT_NEAR(f[1], 2.2, 1e-12);
  auto a = simulate_actual(sc, plan, q);
  EXPECT_NEAR(a.completion[0], 1.2, 1e-12);
  EXPECT_NEAR(a.completion[1], 2.2, 1e-12);
}

TEST(Fictitious, DisjointJobsCommute) {
  auto sc = diamond();
  // Job 0 on the upper branch, job 1 reversed on the lower branch.
  sc.jobs[1].source = 3;
  sc.jobs[1].destination = 0;
  const auto& net = sc.network;
  auto lower = lift_to_layered(net, PhysicalPlan{{2}, {{*net.find_link(3, 2)}, {*net.find_link(2, 0)}}}, 3, 0);
  auto upper = diamond_path(sc, 1);
  auto q = QueueSnapshot::zeros(net);
  RoutePlan ab, ba;
  ab.entries = {entry(0, 0, upper), entry(1, 1, lower)};
  ba.entries = {entry(1, 0, lower), entry(0, 1, upper)};
  auto f1 = fictitious_completion(sc, ab, q);
  auto f2 = fictitious_completion(sc, ba, q);
  EXPECT_EQ(f1[0], f2[1]);
  EXPECT_EQ(f1[1], f2[0]);
}

TEST(Actual, SharedNodeLowPriorityBelowFictitious) {
  // Both jobs compute at node 1. Job 1's input transfer overlaps job 0's
  // compute, so it waits less than the full fictitious backlog.
  auto sc = chain(2, 2.0);
  RoutePlan plan;
  plan.entries = {entry(0, 0, chain_path(sc)), entry(1, 1, chain_path(sc))};
  auto q = QueueSnapshot::zeros(sc.network);
  auto f = fictitious_completion(sc, plan, q);
  auto a = simulate_actual(sc, plan, q);
  EXPECT_NEAR(f[0], 4.0, 1e-12);
  EXPECT_NEAR(a.completion[0], 4.0, 1e-12);
  // Link 0 busy [0,1] with job 0, [1,2] job 1; node 1 busy [1,3] job 0,
  // [3,5] job 1; link 1 [3,4] job 0, [5,6] job 1.
  EXPECT_NEAR(a.completion[1], 6.0, 1e-12);
  EXPECT_NEAR(f[1], 8.0, 1e-12);
  EXPECT_LE(a.completion[1], f[1]);
}

TEST(Actual, InitialBacklogServedFirst) {
  auto sc = chain(1, 1.0);
  auto q = QueueSnapshot::zeros(sc.network);
  q.node_mm[1] = 5.0;
  RoutePlan plan;
  plan.entries = {entry(0, 0, chain_path(sc))};
  auto a = simulate_actual(sc, plan, q);
  // Input 1 s, backlog clears at 5 s, compute 1 s, output 1 s.
  EXPECT_NEAR(a.completion[0], 7.0, 1e-12);
  EXPECT_NEAR(fictitious_completion(sc, plan, q)[0], 8.0, 1e-12);
}

TEST(Actual, PreemptionByHigherPriority) {
  // Low-priority job 1 computes at node 1 from t=0 (s = node 1) and is
  // preempted when job 0's input arrives at t=1.
  auto sc = chain(2, 2.0);
  sc.jobs[1].source = 1;
  sc.jobs[1].destination = 1;
  RoutePlan plan;
  plan.entries = {entry(0, 0, chain_path(sc)),
                  entry(1, 1, lift_to_layered(sc.network, PhysicalPlan{{1}, {{}, {}}}, 1, 1))};
  auto a = simulate_actual(sc, plan, QueueSnapshot::zeros(sc.network));
  EXPECT_NEAR(a.completion[0], 4.0, 1e-12);
  EXPECT_NEAR(a.completion[1], 4.0, 1e-12);  // 1 s before, 1 s after job 0's [1,3]
  std::map<std::string, int> kinds;
  for (const auto& e : a.log)
    if (e.job == 1) ++kinds[to_string(e.event)];
  EXPECT_EQ(kinds["preempt"], 1);
  EXPECT_EQ(kinds["resume"], 1);
}

TEST(Actual, HighestPriorityUnaffectedByOthers) {
  InstanceOptions o;
  o.min_jobs = 2;
  o.max_nodes = 8;
  o.random_queues = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto sc = random_instance(seed, o);
    auto q = QueueSnapshot::from_network(sc.network);
    auto plan = greedy_route(sc, q);
    auto all = simulate_actual(sc, plan, q);
    RoutePlan alone;
    alone.entries = {plan.entries[0]};
    auto one = simulate_actual(sc, alone, q);
    EXPECT_DOUBLE_EQ(all.completion[0], one.completion[0]) << "seed " << seed;
  }
}

TEST(Actual, WorkConservationAndWellFormedLog) {
  InstanceOptions o;
  o.max_nodes = 8;
  o.random_queues = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto sc = random_instance(seed, o);
    const auto& net = sc.network;
    auto q = QueueSnapshot::from_network(net);
    auto plan = greedy_route(sc, q);
    auto res = simulate_actual(sc, plan, q);

    const auto n = net.node_count();
    std::vector<double> work(n + net.link_count(), 0.0);
    for (NodeId u = 0; u < n; ++u)
      if (q.node_mm[u] > 0 && net.node(u).mu_mm_s > 0) work[u] += q.node_mm[u] / net.node(u).mu_mm_s;
    for (LinkId e = 0; e < net.link_count(); ++e) work[n + e] += link_wait(net, q, sc.cost, e);
    for (const auto& entry : plan.entries)
      for (const auto& t : build_task_chain(net, sc.jobs[entry.job], sc.cost, entry.path).tasks)
        work[(t.kind == ComponentKind::node ? 0 : n) + t.component] += t.duration;
    ASSERT_EQ(res.busy_time.size(), work.size());
    for (std::size_t c = 0; c < work.size(); ++c) EXPECT_NEAR(res.busy_time[c], work[c], 1e-9 * (1 + work[c]));

    // Per component, one job in service at a time; times non-decreasing.
    std::map<std::pair<int, std::uint32_t>, std::int64_t> serving;
    double last = 0.0;
    for (const auto& ev : res.log) {
      EXPECT_GE(ev.time, last);
      last = ev.time;
      auto key = std::make_pair(static_cast<int>(ev.kind), ev.component);
      switch (ev.event) {
        case SimEvent::Kind::start:
        case SimEvent::Kind::resume:
          EXPECT_FALSE(serving.count(key)) << "seed " << seed;
          serving[key] = ev.job;
          break;
        case SimEvent::Kind::preempt:
        case SimEvent::Kind::finish:
          ASSERT_TRUE(serving.count(key));
          EXPECT_EQ(serving[key], ev.job);
          serving.erase(key);
          break;
      }
    }
    EXPECT_TRUE(serving.empty());

    auto f = fictitious_completion(sc, plan, q);
    for (std::size_t p = 0; p < f.size(); ++p)
      if (plan.entries[p].simple) {
        EXPECT_LE(res.completion[p], f[p] + 1e-9) << "seed " << seed;
      }
  }
}

TEST(Actual, Deterministic) {
  InstanceOptions o;
  o.random_queues = true;
  auto sc = random_instance(3, o);
  auto q = QueueSnapshot::from_network(sc.network);
  auto plan = greedy_route(sc, q);
  std::ostringstream a, b;
  write_event_csv(a, simulate_actual(sc, plan, q).log);
  write_event_csv(b, simulate_actual(sc, plan, q).log);
  EXPECT_EQ(a.str(), b.str());
}

TEST(EventCsv, HeaderAndRows) {
  EventLog log{{0.5, ComponentKind::link, 3, -1, SimEvent::Kind::finish}, {1.25, ComponentKind::node, 2, 0, SimEvent::Kind::start}};
  std::ostringstream os;
  write_event_csv(os, log);
  EXPECT_EQ(os.str(), "time_s,component,kind,job,event\n0.5,3,link,-1,finish\n1.25,2,node,0,start\n");
}

TEST(EvaluatePlan, FillsBothCompletions) {
  auto sc = diamond();
  auto plan = greedy_route(sc);
  evaluate_plan(sc, plan, QueueSnapshot::zeros(sc.network));
  ASSERT_TRUE(plan.c_max_actual().has_value());
  EXPECT_NEAR(*plan.c_max_actual(), 2.2, 1e-12);
  EXPECT_NEAR(plan.c_max_fict(), 2.2, 1e-12);
}

TEST(Dominance, SmallSuite) {
  auto r = dominance_suite({40, 17});
  EXPECT_TRUE(r.passed()) << r.summary;
}
