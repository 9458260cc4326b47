#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dnnsplit/costs.hpp"
#include "dnnsplit/errors.hpp"
#include "dnnsplit/linprog.hpp"
#include "dnnsplit/topology.hpp"
#include "dnnsplit/workload.hpp"

namespace dnnsplit {

// Column layout: one block per job slot holding r for every layered edge in
// edge-id order, followed by z per physical node when present.
struct VarIndex {
  std::size_t jobs = 0;
  std::size_t edges = 0;
  std::size_t nodes = 0;
  bool with_z = false;

  std::size_t block() const { return edges + (with_z ? nodes : 0); }
  std::size_t size() const { return jobs * block(); }
  std::uint32_t r(std::size_t slot, std::size_t edge_id) const {
    return static_cast<std::uint32_t>(slot * block() + edge_id);
  }
  std::uint32_t z(std::size_t slot, NodeId u) const {
    return static_cast<std::uint32_t>(slot * block() + edges + u);
  }
};

struct FormulationOptions {
  double delta = 1e-6;  // per-edge penalty against loopy paths
  bool relax = false;   // LP relaxation instead of binaries
  bool budgets = true;  // compute and memory budget rows (service ILP only)
};

struct RoutingProgram {
  const PhysicalNetwork* net = nullptr;
  std::uint32_t layers = 0;
  std::vector<Job> jobs;
  CostModel cost;
  lp::LinearProgram lp;
  VarIndex index;
  std::vector<double> raw_cost;  // objective without the penalty

  LayeredGraph graph() const { return LayeredGraph(*net, layers); }
  double raw_objective(std::span<const double> x) const {
    double z = 0.0;
    for (std::size_t j = 0; j < raw_cost.size(); ++j) z += raw_cost[j] * x[j];
    return z;
  }
};

// Some positive-rate node must be reachable from s and able to reach t.
inline void require_routable(const PhysicalNetwork& net, const Job& job) {
  auto from = net.reachable_from(job.source);
  auto to = net.reaching(job.destination);
  for (NodeId u = 0; u < net.node_count(); ++u)
    if (net.node(u).mu_mm_s > 0.0 && from[u] && to[u]) return;
  throw InfeasibleTopology("job " + std::to_string(job.id) + " has no usable compute node");
}

namespace detail {

// Flow-conservation rows of one job block over layers 0..L^j.
inline void add_flow_rows(lp::LinearProgram& lp, const LayeredGraph& g, const VarIndex& idx, std::size_t slot,
                          const Job& job) {
  const auto& net = g.base();
  const std::uint32_t Lj = job.model.layers();
  for (std::uint32_t l = 0; l <= Lj; ++l)
    for (NodeId u = 0; u < net.node_count(); ++u) {
      LayeredVertex v{u, l};
      std::vector<lp::Term> terms;
      for (const auto& e : g.out_edges(v))
        if (e.layer <= Lj) terms.push_back({idx.r(slot, g.edge_id(e)), 1.0});
      for (const auto& e : g.in_edges(v)) terms.push_back({idx.r(slot, g.edge_id(e)), -1.0});
      double b = 0.0;
      if (l == 0 && u == job.source) b += 1.0;
      if (l == Lj && u == job.destination) b -= 1.0;
      lp.add_row(std::move(terms), lp::Relation::equal, b);
    }
}

}  // namespace detail

// Service-time program over all jobs: binary r per job and layered edge, flow
// conservation, optional compute/memory budgets.
inline RoutingProgram build_service_ilp(const Scenario& sc, const FormulationOptions& opt = {}) {
  RoutingProgram p;
  p.net = &sc.network;
  p.layers = sc.max_layers();
  p.jobs = sc.jobs;
  p.cost = sc.cost;
  const auto& net = sc.network;
  const LayeredGraph g(net, p.layers);
  p.index = VarIndex{sc.jobs.size(), g.edge_count(), net.node_count(), false};

  for (std::size_t s = 0; s < sc.jobs.size(); ++s) {
    const auto& job = sc.jobs[s];
    require_routable(net, job);
    const std::uint32_t Lj = job.model.layers();
    for (std::size_t id = 0; id < g.edge_count(); ++id) {
      const auto e = g.edge(id);
      double c = 0.0;
      bool usable = e.layer <= Lj;
      if (usable) {
        c = edge_service_time(net, job.model, sc.cost, e);
        if (!std::isfinite(c)) usable = false;
      }
      if (!usable) {
        p.lp.add_column(0.0, 0.0, 0.0, !opt.relax);
        p.raw_cost.push_back(0.0);
      } else {
        p.lp.add_column(c + opt.delta, 0.0, 1.0, !opt.relax);
        p.raw_cost.push_back(c);
      }
    }
  }
  for (std::size_t s = 0; s < sc.jobs.size(); ++s) detail::add_flow_rows(p.lp, g, p.index, s, sc.jobs[s]);

  if (opt.budgets) {
    for (NodeId u = 0; u < net.node_count(); ++u) {
      std::vector<lp::Term> comp, mem;
      for (std::size_t s = 0; s < sc.jobs.size(); ++s) {
        const auto& m = sc.jobs[s].model;
        for (std::uint32_t l = 1; l <= m.layers(); ++l) {
          auto col = p.index.r(s, g.edge_id(LayeredEdge::cross(l, u)));
          comp.push_back({col, m.c(l)});
          mem.push_back({col, m.m(l)});
        }
      }
      p.lp.add_row(std::move(comp), lp::Relation::less_equal, net.node(u).cbar_mm);
      p.lp.add_row(std::move(mem), lp::Relation::less_equal, net.node(u).mem_kb);
    }
  }
  return p;
}

// Single-job waiting-aware program: r per layered edge plus z per node with
// r_cross(l,u) <= z_u; node waiting is charged through z.
inline RoutingProgram build_single_job_lp(const PhysicalNetwork& net, const Job& job, const QueueSnapshot& q,
                                          const CostModel& cost, const FormulationOptions& opt = {}) {
  require_routable(net, job);
  RoutingProgram p;
  p.net = &net;
  p.layers = job.model.layers();
  p.jobs = {job};
  p.cost = cost;
  const LayeredGraph g(net, p.layers);
  p.index = VarIndex{1, g.edge_count(), net.node_count(), true};
  const bool integral = !opt.relax;

  std::vector<char> usable_node(net.node_count(), 0);
  for (NodeId u = 0; u < net.node_count(); ++u) usable_node[u] = net.node(u).mu_mm_s > 0.0;

  for (std::size_t id = 0; id < g.edge_count(); ++id) {
    const auto e = g.edge(id);
    if (e.is_cross() && !usable_node[e.component]) {
      p.lp.add_column(0.0, 0.0, 0.0, integral);
      p.raw_cost.push_back(0.0);
      continue;
    }
    double c = edge_service_time(net, job.model, cost, e);
    if (!e.is_cross()) c += link_wait(net, q, cost, e.component);
    p.lp.add_column(c + opt.delta, 0.0, 1.0, integral);
    p.raw_cost.push_back(c);
  }
  for (NodeId u = 0; u < net.node_count(); ++u) {
    if (!usable_node[u]) {
      p.lp.add_column(0.0, 0.0, 0.0, integral);
      p.raw_cost.push_back(0.0);
      continue;
    }
    double w = node_wait_time(net, q, u);
    p.lp.add_column(w, 0.0, 1.0, integral);
    p.raw_cost.push_back(w);
  }

  detail::add_flow_rows(p.lp, g, p.index, 0, job);
  for (std::uint32_t l = 1; l <= p.layers; ++l)
    for (NodeId u = 0; u < net.node_count(); ++u) {
      if (!usable_node[u]) continue;
      p.lp.add_row({{p.index.r(0, g.edge_id(LayeredEdge::cross(l, u))), 1.0}, {p.index.z(0, u), -1.0}},
                   lp::Relation::less_equal, 0.0);
    }
  return p;
}

// Follows the unit flow of one job block from (s,0) to (t,L^j) and erases
// loops. Cycles detached from the walk are dropped. Throws FractionalSolution
// if any variable of the block is not within tol of 0 or 1.
inline LayeredPath extract_path(const RoutingProgram& p, std::span<const double> x, std::size_t slot = 0,
                                double tol = 1e-6) {
  const auto& job = p.jobs.at(slot);
  const auto& net = *p.net;
  const LayeredGraph g = p.graph();
  const std::size_t begin = slot * p.index.block();
  for (std::size_t k = begin; k < begin + p.index.block(); ++k) {
    double v = x[k];
    if (std::abs(v) > tol && std::abs(v - 1.0) > tol)
      throw FractionalSolution("variable " + std::to_string(k) + " = " + std::to_string(v));
  }
  std::vector<char> avail(g.edge_count(), 0);
  for (std::size_t id = 0; id < g.edge_count(); ++id) avail[id] = x[p.index.r(slot, id)] > 0.5;

  const LayeredVertex target{job.destination, job.model.layers()};
  LayeredVertex at{job.source, 0};
  std::vector<LayeredEdge> walk;
  std::size_t guard = 0;
  while (at != target) {
    if (++guard > g.edge_count() + 1) throw FractionalSolution("selected edges do not form a path");
    std::optional<LayeredEdge> next;
    for (const auto& e : g.out_edges(at)) {
      auto id = g.edge_id(e);
      if (avail[id] && (!next || id < g.edge_id(*next))) next = e;
    }
    if (!next) throw FractionalSolution("selected edges do not form a path");
    avail[g.edge_id(*next)] = 0;
    walk.push_back(*next);
    at = g.head(*next);
  }

  // Loop erasure on layered vertices.
  std::vector<LayeredEdge> path;
  std::vector<std::int64_t> pos_of(g.vertex_count(), -1);
  std::vector<std::size_t> vertex_at;  // vertex id before path[i]
  pos_of[g.vertex_id({job.source, 0})] = 0;
  vertex_at.push_back(g.vertex_id({job.source, 0}));
  for (const auto& e : walk) {
    auto h = g.vertex_id(g.head(e));
    if (pos_of[h] >= 0) {
      auto keep = static_cast<std::size_t>(pos_of[h]);
      for (std::size_t i = keep + 1; i < vertex_at.size(); ++i) pos_of[vertex_at[i]] = -1;
      path.resize(keep);
      vertex_at.resize(keep + 1);
      continue;
    }
    path.push_back(e);
    vertex_at.push_back(h);
    pos_of[h] = static_cast<std::int64_t>(path.size());
  }
  LayeredPath out{job.source, job.destination, job.model.layers(), std::move(path)};
  validate_path(net, out);
  return out;
}

// Prior-work style placement: per-layer node choice by dynamic programming,
// with transfers charged as hops * data / (mean rate on a shortest-hop path).
struct BaselineRoute {
  LayeredPath path;
  double model_objective = 0.0;  // the DP's own estimate
  double service_time = 0.0;     // true service time of the resulting path
};

inline BaselineRoute assignment_baseline_route(const PhysicalNetwork& net, const Job& job, const CostModel& cost) {
  require_routable(net, job);
  const auto n = net.node_count();
  const auto L = job.model.layers();
  constexpr double inf = std::numeric_limits<double>::infinity();

  // All-pairs shortest-hop routes.
  std::vector<std::vector<std::optional<std::vector<LinkId>>>> route(n, std::vector<std::optional<std::vector<LinkId>>>(n));
  auto get_route = [&](NodeId a, NodeId b) -> const std::optional<std::vector<LinkId>>& {
    auto& r = route[a][b];
    if (!r) {
      try {
        r = shortest_hop_path(net, a, b);
      } catch (const InfeasibleTopology&) {
        r = std::vector<LinkId>{LinkId(-1)};
      }
    }
    return r;
  };
  auto transfer = [&](NodeId a, NodeId b, double kb) {
    if (a == b) return 0.0;
    const auto& r = *get_route(a, b);
    if (r.size() == 1 && r[0] == LinkId(-1)) return inf;
    if (cost.zero_network_delay) return 0.0;
    double mean = 0.0;
    for (auto e : r) mean += net.link(e).mu_bps;
    mean /= static_cast<double>(r.size());
    return static_cast<double>(r.size()) * units::kb_to_bits(kb) / mean;
  };
  auto comp = [&](std::uint32_t l, NodeId u) {
    const auto& nd = net.node(u);
    if (!(nd.mu_mm_s > 0.0)) return inf;
    return effective_compute_mm(job.model, l, nd, cost) / nd.mu_mm_s;
  };

  std::vector<std::vector<double>> best(L + 1, std::vector<double>(n, inf));
  std::vector<std::vector<NodeId>> from(L + 1, std::vector<NodeId>(n, 0));
  for (NodeId u = 0; u < n; ++u) best[1][u] = transfer(job.source, u, job.model.d(0)) + comp(1, u);
  for (std::uint32_t l = 2; l <= L; ++l)
    for (NodeId v = 0; v < n; ++v) {
      double cv = comp(l, v);
      if (!std::isfinite(cv)) continue;
      for (NodeId u = 0; u < n; ++u) {
        double c = best[l - 1][u] + transfer(u, v, job.model.d(l - 1)) + cv;
        if (c < best[l][v]) {
          best[l][v] = c;
          from[l][v] = u;
        }
      }
    }
  double total = inf;
  NodeId last = 0;
  for (NodeId u = 0; u < n; ++u) {
    double c = best[L][u] + transfer(u, job.destination, job.model.d(L));
    if (c < total) {
      total = c;
      last = u;
    }
  }
  if (!std::isfinite(total)) throw InfeasibleTopology("baseline found no placement");

  PhysicalPlan plan;
  plan.compute.assign(L, 0);
  plan.compute[L - 1] = last;
  for (std::uint32_t l = L; l >= 2; --l) plan.compute[l - 2] = from[l][plan.compute[l - 1]];
  plan.segments.resize(L + 1);
  NodeId at = job.source;
  for (std::uint32_t l = 0; l <= L; ++l) {
    NodeId to = l < L ? plan.compute[l] : job.destination;
    if (at != to) plan.segments[l] = *get_route(at, to);
    at = to;
  }
  BaselineRoute out;
  out.path = lift_to_layered(net, plan, job.source, job.destination);
  out.model_objective = total;
  out.service_time = path_service_time(net, job.model, cost, out.path);
  return out;
}

// Components that can serve work: positive-rate nodes, and links unless the
// network delay is ignored.
struct ComponentCounts {
  std::size_t nodes = 0;
  std::size_t links = 0;
  std::size_t total() const { return nodes + links; }
};

inline ComponentCounts positive_components(const PhysicalNetwork& net, const CostModel& cost) {
  ComponentCounts c;
  for (const auto& n : net.nodes())
    if (n.mu_mm_s > 0.0) ++c.nodes;
  if (!cost.zero_network_delay)
    for (const auto& l : net.links())
      if (std::isfinite(l.mu_bps) && l.mu_bps > 0.0) ++c.links;
  return c;
}

struct LowerBounds {
  double lb_max = 0.0;
  double lb_avg = 0.0;
  double value() const { return std::max(lb_max, lb_avg); }
};

inline LowerBounds compute_lower_bounds(const Scenario& sc, std::span<const double> s_ss) {
  LowerBounds b;
  double sum = 0.0;
  for (double s : s_ss) {
    b.lb_max = std::max(b.lb_max, s);
    sum += s;
  }
  auto c = positive_components(sc.network, sc.cost);
  b.lb_avg = c.total() > 0 ? sum / static_cast<double>(c.total()) : 0.0;
  return b;
}

}  // namespace dnnsplit
