#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "dnnsplit/costs.hpp"
#include "dnnsplit/formulations.hpp"
#include "dnnsplit/plan.hpp"
#include "dnnsplit/sim.hpp"

namespace dnnsplit {

struct PolicyOptions {
  double delta = 1e-6;
  lp::SimplexOptions simplex;
};

namespace detail {

inline LayeredPath solve_route_lp(const PhysicalNetwork& net, const Job& job, const QueueSnapshot& q,
                                  const CostModel& cost, const PolicyOptions& opt) {
  FormulationOptions fo;
  fo.delta = opt.delta;
  fo.relax = true;
  auto prog = build_single_job_lp(net, job, q, cost, fo);
  auto sol = lp::solve_lp(prog.lp, opt.simplex);
  if (sol.status != lp::Status::optimal)
    throw SolverFailure(std::string("single-job LP ended with status ") + lp::to_string(sol.status));
  return extract_path(prog, sol.x);
}

// Components (nodes, then links offset by node count) used by a path.
inline std::vector<std::size_t> touched_components(const PhysicalNetwork& net, const LayeredPath& path) {
  std::vector<std::size_t> out;
  for (const auto& e : path.edges) out.push_back(e.is_cross() ? e.component : net.node_count() + e.component);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline void note_if_loopy(const PhysicalNetwork& net, RouteEntry& e, RoutePlan& plan) {
  e.simple = is_simple_in_physical(net, e.path);
  if (!e.simple) plan.diagnostics.push_back("job " + std::to_string(e.job) + ": path is not physically simple");
}

}  // namespace detail

// Repeatedly routes every unrouted job by the relaxed single-job program
// against the current backlog, fixes the job with the smallest completion
// (lowest id on ties) at the next priority and adds its load.
inline RoutePlan greedy_route(const Scenario& sc, const QueueSnapshot& initial, const PolicyOptions& opt = {}) {
  const auto& net = sc.network;
  QueueSnapshot q = initial;
  struct Cached {
    LayeredPath path;
    double value;
    std::vector<std::size_t> touched;
  };
  std::vector<std::optional<Cached>> cache(sc.jobs.size());
  std::vector<char> done(sc.jobs.size(), 0);
  RoutePlan plan;

  for (std::uint32_t p = 0; p < sc.jobs.size(); ++p) {
    std::optional<std::size_t> pick;
    for (std::size_t j = 0; j < sc.jobs.size(); ++j) {
      if (done[j]) continue;
      if (!cache[j]) {
        auto path = detail::solve_route_lp(net, sc.jobs[j], q, sc.cost, opt);
        double v = fictitious_cost(net, sc.jobs[j].model, sc.cost, q, path);
        cache[j] = Cached{path, v, detail::touched_components(net, path)};
      }
      if (!pick || cache[j]->value < cache[*pick]->value) pick = j;
    }
    const auto j = *pick;
    RouteEntry e;
    e.job = static_cast<std::uint32_t>(j);
    e.priority = p;
    e.path = cache[j]->path;
    e.c_fict_s = cache[j]->value;
    detail::note_if_loopy(net, e, plan);
    add_path_load(net, sc.jobs[j].model, sc.cost, e.path, q);
    done[j] = 1;

    // Costs only grow on the components just loaded, so a cached route that
    // avoids them stays optimal.
    const auto grown = cache[j]->touched;
    for (std::size_t k = 0; k < sc.jobs.size(); ++k) {
      if (done[k] || !cache[k]) continue;
      const auto& t = cache[k]->touched;
      std::vector<std::size_t> common;
      std::set_intersection(t.begin(), t.end(), grown.begin(), grown.end(), std::back_inserter(common));
      if (!common.empty()) cache[k].reset();
    }
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

inline RoutePlan greedy_route(const Scenario& sc, const PolicyOptions& opt = {}) {
  return greedy_route(sc, QueueSnapshot::from_network(sc.network), opt);
}

namespace detail {

struct PhysicalRoute {
  std::vector<LinkId> links;
  double weight = 0.0;
};

// Dijkstra on (weight, hops) with lowest-id relaxation order.
template <class Weight>
std::optional<PhysicalRoute> shortest_physical_path(const PhysicalNetwork& net, NodeId s, NodeId t, Weight w) {
  const auto n = net.node_count();
  using Key = std::pair<double, std::uint32_t>;
  std::vector<Key> dist(n, {std::numeric_limits<double>::infinity(), 0});
  std::vector<std::int64_t> via(n, -1);
  std::vector<char> closed(n, 0);
  using QE = std::tuple<double, std::uint32_t, NodeId>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
  dist[s] = {0.0, 0};
  pq.push({0.0, 0, s});
  while (!pq.empty()) {
    auto [d, h, u] = pq.top();
    pq.pop();
    if (closed[u]) continue;
    closed[u] = 1;
    for (LinkId e : net.out_links(u)) {
      NodeId v = net.link(e).to;
      Key cand{d + w(e), h + 1};
      if (cand < dist[v]) {
        dist[v] = cand;
        via[v] = e;
        pq.push({cand.first, cand.second, v});
      }
    }
  }
  if (!closed[t]) return std::nullopt;
  PhysicalRoute r;
  r.weight = dist[t].first;
  for (NodeId v = t; v != s;) {
    auto e = static_cast<LinkId>(via[v]);
    r.links.push_back(e);
    v = net.link(e).from;
  }
  std::reverse(r.links.begin(), r.links.end());
  return r;
}

// All layers at `u`, input over `in`, output over `out`.
inline LayeredPath single_node_path(const PhysicalNetwork& net, const Job& job, NodeId u,
                                    const std::vector<LinkId>& in, const std::vector<LinkId>& out) {
  PhysicalPlan plan;
  plan.compute.assign(job.model.layers(), u);
  plan.segments.resize(job.model.layers() + 1);
  plan.segments.front() = in;
  plan.segments.back() = out;
  return lift_to_layered(net, plan, job.source, job.destination);
}

}  // namespace detail

// Node-first selection: per job, the node with the earliest compute
// completion, joined to source and destination by waiting-aware shortest
// paths; the job with the earliest total goes next.
inline RoutePlan nfs_route(const Scenario& sc, const QueueSnapshot& initial) {
  const auto& net = sc.network;
  QueueSnapshot q = initial;
  std::vector<char> done(sc.jobs.size(), 0);
  RoutePlan plan;
  for (std::uint32_t p = 0; p < sc.jobs.size(); ++p) {
    std::optional<std::size_t> best_job;
    LayeredPath best_path;
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sc.jobs.size(); ++j) {
      if (done[j]) continue;
      const auto& job = sc.jobs[j];
      require_routable(net, job);
      auto from = net.reachable_from(job.source);
      auto to = net.reaching(job.destination);
      std::optional<NodeId> u;
      double best_cp = std::numeric_limits<double>::infinity();
      for (NodeId v = 0; v < net.node_count(); ++v) {
        const auto& nd = net.node(v);
        if (!(nd.mu_mm_s > 0.0) || !from[v] || !to[v]) continue;
        double c = q.node_mm[v];
        for (std::uint32_t l = 1; l <= job.model.layers(); ++l) c += effective_compute_mm(job.model, l, nd, sc.cost);
        c /= nd.mu_mm_s;
        if (c < best_cp) {
          best_cp = c;
          u = v;
        }
      }
      const double in_bits = units::kb_to_bits(job.model.d(0));
      const double out_bits = units::kb_to_bits(job.model.d(job.model.layers()));
      auto weight = [&](double bits) {
        return [&, bits](LinkId e) {
          if (sc.cost.zero_network_delay) return 0.0;
          return (q.link_bits[e] + bits) / net.link(e).mu_bps;
        };
      };
      auto h1 = detail::shortest_physical_path(net, job.source, *u, weight(in_bits));
      auto h2 = detail::shortest_physical_path(net, *u, job.destination, weight(out_bits));
      auto path = detail::single_node_path(net, job, *u, h1->links, h2->links);
      double total = fictitious_cost(net, job.model, sc.cost, q, path);
      if (total < best_total) {
        best_total = total;
        best_job = j;
        best_path = std::move(path);
      }
    }
    RouteEntry e;
    e.job = static_cast<std::uint32_t>(*best_job);
    e.priority = p;
    e.path = std::move(best_path);
    e.c_fict_s = best_total;
    detail::note_if_loopy(net, e, plan);
    add_path_load(net, sc.jobs[*best_job].model, sc.cost, e.path, q);
    done[*best_job] = 1;
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

inline RoutePlan nfs_route(const Scenario& sc) { return nfs_route(sc, QueueSnapshot::from_network(sc.network)); }

struct ServiceRoute {
  LayeredPath path;
  double service_s = 0.0;
};

// Route with the smallest service time (empty queues).
inline ServiceRoute shortest_service_route(const PhysicalNetwork& net, const Job& job, const CostModel& cost,
                                           const PolicyOptions& opt = {}) {
  auto path = detail::solve_route_lp(net, job, QueueSnapshot::zeros(net), cost, opt);
  double s = path_service_time(net, job.model, cost, path);
  return {std::move(path), s};
}

// Shortest-waiting route for one job given the backlog left by higher
// priority jobs: every layer at the node with the least compute waiting,
// reached over paths with the least link waiting (fewest hops on ties).
inline RouteEntry sw_route(const Scenario& sc, const Job& job, const QueueSnapshot& q) {
  const auto& net = sc.network;
  require_routable(net, job);
  auto from = net.reachable_from(job.source);
  auto to = net.reaching(job.destination);
  std::optional<NodeId> u;
  double best = std::numeric_limits<double>::infinity();
  for (NodeId v = 0; v < net.node_count(); ++v) {
    if (!(net.node(v).mu_mm_s > 0.0) || !from[v] || !to[v]) continue;
    double w = node_wait_time(net, q, v);
    if (w < best) {
      best = w;
      u = v;
    }
  }
  auto weight = [&](LinkId e) { return link_wait(net, q, sc.cost, e); };
  auto h1 = detail::shortest_physical_path(net, job.source, *u, weight);
  auto h2 = detail::shortest_physical_path(net, *u, job.destination, weight);
  RouteEntry e;
  e.job = job.id;
  e.path = detail::single_node_path(net, job, *u, h1->links, h2->links);
  e.c_fict_s = fictitious_cost(net, job.model, sc.cost, q, e.path);
  e.simple = is_simple_in_physical(net, e.path);
  return e;
}

// SW for the last job of a greedy prefix: routes `plan`'s first J-1 entries'
// load, then applies sw_route to the job greedy placed last.
inline RouteEntry sw_route_after_greedy(const Scenario& sc, const RoutePlan& greedy, const QueueSnapshot& initial) {
  QueueSnapshot q = initial;
  for (std::size_t p = 0; p + 1 < greedy.entries.size(); ++p) {
    const auto& e = greedy.entries[p];
    add_path_load(sc.network, sc.jobs[e.job].model, sc.cost, e.path, q);
  }
  auto e = sw_route(sc, sc.jobs[greedy.entries.back().job], q);
  e.priority = static_cast<std::uint32_t>(greedy.entries.size() - 1);
  return e;
}

// ---------------------------------------------------------------------------
// Exhaustive optimum for tiny instances.

enum class EvalSystem : std::uint8_t { fictitious, actual };

struct BruteForceLimits {
  std::size_t max_nodes = 5;
  std::size_t max_jobs = 3;
  std::uint32_t max_layers = 3;
  std::size_t max_paths_per_job = 200000;
};

// Every route whose per-layer transfer segments are simple physical paths.
// Routes with a loop inside a segment are dominated (more load, no less
// cost) and omitted. With zero network delay one route per compute sequence
// is kept.
inline std::vector<LayeredPath> enumerate_routes(const PhysicalNetwork& net, const Job& job, const CostModel& cost,
                                                 std::size_t cap = 200000) {
  const auto n = net.node_count();
  const auto L = job.model.layers();
  // Simple paths between every ordered pair.
  std::vector<std::vector<std::vector<std::vector<LinkId>>>> simple(n, std::vector<std::vector<std::vector<LinkId>>>(n));
  for (NodeId s = 0; s < n; ++s) {
    std::vector<char> on(n, 0);
    std::vector<LinkId> stack;
    auto dfs = [&](auto&& self, NodeId u) -> void {
      simple[s][u].push_back(stack);
      if (cost.zero_network_delay && simple[s][u].size() > 1) simple[s][u].pop_back();
      on[u] = 1;
      for (LinkId e : net.out_links(u)) {
        NodeId v = net.link(e).to;
        if (on[v]) continue;
        stack.push_back(e);
        self(self, v);
        stack.pop_back();
      }
      on[u] = 0;
    };
    dfs(dfs, s);
  }
  std::vector<NodeId> compute_nodes;
  for (NodeId u = 0; u < n; ++u)
    if (net.node(u).mu_mm_s > 0.0) compute_nodes.push_back(u);

  std::vector<LayeredPath> out;
  PhysicalPlan plan;
  plan.compute.assign(L, 0);
  plan.segments.assign(L + 1, {});
  auto build = [&](auto&& self, std::uint32_t l, NodeId at) -> void {
    // l: next segment index to fill; segment l ends at compute[l] or t.
    NodeId to = l < L ? plan.compute[l] : job.destination;
    for (const auto& seg : simple[at][to]) {
      plan.segments[l] = seg;
      if (l == L) {
        if (out.size() >= cap) throw SizeLimit("too many candidate routes");
        out.push_back(lift_to_layered(net, plan, job.source, job.destination));
      } else {
        self(self, l + 1, to);
      }
    }
  };
  auto choose = [&](auto&& self, std::uint32_t l) -> void {
    if (l == L) {
      build(build, 0, job.source);
      return;
    }
    for (NodeId u : compute_nodes) {
      plan.compute[l] = u;
      self(self, l + 1);
    }
  };
  choose(choose, 0);
  return out;
}

// Minimum C_max over all priority orders and joint route choices, in the
// fictitious or the actual system.
inline RoutePlan brute_force_opt(const Scenario& sc, EvalSystem system, const QueueSnapshot& initial,
                                 const BruteForceLimits& lim = {}) {
  const auto& net = sc.network;
  const std::size_t J = sc.jobs.size();
  if (net.node_count() > lim.max_nodes || J > lim.max_jobs || sc.max_layers() > lim.max_layers)
    throw SizeLimit("instance too large for exhaustive search");

  std::vector<std::vector<LayeredPath>> routes(J);
  std::vector<std::vector<double>> service(J);
  std::vector<double> min_service(J, std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < J; ++j) {
    routes[j] = enumerate_routes(net, sc.jobs[j], sc.cost, lim.max_paths_per_job);
    if (routes[j].empty()) throw InfeasibleTopology("job has no route");
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t r = 0; r < routes[j].size(); ++r)
      order.push_back({path_service_time(net, sc.jobs[j].model, sc.cost, routes[j][r]), r});
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<LayeredPath> sorted;
    for (auto& [s, r] : order) {
      sorted.push_back(std::move(routes[j][r]));
      service[j].push_back(s);
    }
    routes[j] = std::move(sorted);
    min_service[j] = service[j].front();
  }

  std::vector<std::size_t> perm(J);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  RoutePlan best_plan;
  RoutePlan cur;
  cur.entries.resize(J);

  auto dfs = [&](auto&& self, std::size_t p, const QueueSnapshot& q, double cmax) -> void {
    if (p == J) {
      if (cmax < best) {
        best = cmax;
        best_plan = cur;
      }
      return;
    }
    for (std::size_t k = p; k < J; ++k)
      if (min_service[perm[k]] >= best) return;
    const std::size_t j = perm[p];
    const auto& job = sc.jobs[j];
    for (std::size_t r = 0; r < routes[j].size(); ++r) {
      if (service[j][r] >= best) break;
      const auto& path = routes[j][r];
      auto& e = cur.entries[p];
      e.job = static_cast<std::uint32_t>(j);
      e.priority = static_cast<std::uint32_t>(p);
      e.path = path;
      double c;
      if (system == EvalSystem::fictitious) {
        c = fictitious_cost(net, job.model, sc.cost, q, path);
      } else {
        RoutePlan prefix;
        prefix.entries.assign(cur.entries.begin(), cur.entries.begin() + static_cast<std::ptrdiff_t>(p + 1));
        c = simulate_actual(sc, prefix, initial).completion.back();
      }
      e.c_fict_s = system == EvalSystem::fictitious ? c : 0.0;
      if (std::max(cmax, c) >= best) continue;
      QueueSnapshot next = q;
      add_path_load(net, job.model, sc.cost, path, next);
      self(self, p + 1, next, std::max(cmax, c));
    }
  };
  do {
    dfs(dfs, 0, initial, 0.0);
  } while (std::next_permutation(perm.begin(), perm.end()));

  evaluate_plan(sc, best_plan, initial);
  for (auto& e : best_plan.entries) e.simple = is_simple_in_physical(net, e.path);
  return best_plan;
}

// ---------------------------------------------------------------------------
// Approximation ratio.

struct AlphaOptions {
  bool h_s_max = false;  // h_S as the max over jobs instead of the min
};

struct AlphaReport {
  double alpha = 0.0;
  double alpha_tx = 0.0;
  double alpha_cp = 0.0;
  int h_l = 0;
  int h_s = 0;
  int k = 0;
  std::size_t v_pos = 0;
  std::size_t e_pos = 0;
  std::uint32_t layers = 0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;
};

inline AlphaReport compute_alpha(const Scenario& sc, const AlphaOptions& opt = {}) {
  const auto& net = sc.network;
  AlphaReport r;
  auto counts = positive_components(net, sc.cost);
  r.v_pos = counts.nodes;
  r.e_pos = counts.links;
  r.layers = sc.max_layers();
  r.k = edge_connectivity(net);

  double mu_max = 0.0, mu_min = std::numeric_limits<double>::infinity();
  for (const auto& n : net.nodes())
    if (n.mu_mm_s > 0.0) {
      mu_max = std::max(mu_max, n.mu_mm_s);
      mu_min = std::min(mu_min, n.mu_mm_s);
    }
  r.alpha_cp = mu_max / mu_min;

  constexpr double inf = std::numeric_limits<double>::infinity();
  if (sc.cost.zero_network_delay) {
    r.alpha_tx = 0.0;
  } else {
    r.h_l = 0;
    r.h_s = opt.h_s_max ? 0 : std::numeric_limits<int>::max();
    double d_max = 0.0, d_min = inf;
    for (const auto& job : sc.jobs) {
      auto h = hop_path_extremes(net, job.source, job.destination);
      r.h_l = std::max(r.h_l, h.longest);
      r.h_s = opt.h_s_max ? std::max(r.h_s, h.shortest) : std::min(r.h_s, h.shortest);
      for (double d : job.model.data_kb) {
        d_max = std::max(d_max, d);
        d_min = std::min(d_min, d);
      }
    }
    double l_max = 0.0, l_min = inf;
    for (const auto& l : net.links()) {
      l_max = std::max(l_max, l.mu_bps);
      l_min = std::min(l_min, l.mu_bps);
    }
    double num = r.h_l * d_max * l_max;
    double den = r.h_s * d_min * l_min;
    r.alpha_tx = den > 0.0 ? num / den : inf;
  }

  const double VE = static_cast<double>(r.v_pos + r.e_pos);
  const double V = static_cast<double>(r.v_pos);
  const double E = static_cast<double>(r.e_pos);
  const double L1 = static_cast<double>(r.layers) + 1.0;
  const double k = static_cast<double>(r.k);
  const double tx_term = r.alpha_tx == 0.0 ? 0.0 : 2.0 * L1 * r.alpha_tx / k;
  r.alpha1 = std::max(2.0 * r.alpha_tx, r.alpha_cp);
  r.alpha2 = std::max(r.alpha_cp / V, tx_term);
  r.alpha3 = std::max(r.alpha2 * VE, r.alpha1);
  const double tx_term_ve = r.alpha_tx == 0.0 ? 0.0 : 2.0 * L1 * VE * r.alpha_tx / k;
  r.alpha = std::max({2.0 * r.alpha_tx, tx_term_ve, (1.0 + E / V) * r.alpha_cp}) * (2.0 - 1.0 / VE);
  return r;
}

}  // namespace dnnsplit
