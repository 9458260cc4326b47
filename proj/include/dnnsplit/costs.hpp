#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dnnsplit/topology.hpp"
#include "dnnsplit/workload.hpp"

// Per-edge service and waiting times on the layered graph, and the
// fictitious-system cost of a path under a queue snapshot.

namespace dnnsplit {

// Backlog per physical component: nodes in MM, links in bits.
struct QueueSnapshot {
  std::vector<double> node_mm;
  std::vector<double> link_bits;

  static QueueSnapshot zeros(const PhysicalNetwork& net) {
    return {std::vector<double>(net.node_count(), 0.0), std::vector<double>(net.link_count(), 0.0)};
  }
  static QueueSnapshot from_network(const PhysicalNetwork& net) {
    QueueSnapshot q = zeros(net);
    for (NodeId u = 0; u < net.node_count(); ++u) q.node_mm[u] = net.node(u).q_mm;
    for (LinkId e = 0; e < net.link_count(); ++e) q.link_bits[e] = net.link(e).q_bits;
    return q;
  }

  friend bool operator==(const QueueSnapshot&, const QueueSnapshot&) = default;
};

// Task size carried by a layered edge for `model`: data bits on intra edges,
// effective compute MM on cross edges.
inline double edge_task(const PhysicalNetwork& net, const DnnModel& model, const CostModel& cost,
                        const LayeredEdge& e) {
  if (e.is_cross()) return effective_compute_mm(model, e.layer, net.node(e.component), cost);
  return units::kb_to_bits(model.d(e.layer));
}

// Service time of one edge; infinite for a cross edge at a zero-rate node.
inline double edge_service_time(const PhysicalNetwork& net, const DnnModel& model, const CostModel& cost,
                                const LayeredEdge& e) {
  if (e.is_cross()) {
    const auto& n = net.node(e.component);
    if (!(n.mu_mm_s > 0.0)) return std::numeric_limits<double>::infinity();
    return effective_compute_mm(model, e.layer, n, cost) / n.mu_mm_s;
  }
  return link_service_time(net.link(e.component), model.d(e.layer), cost);
}

inline double node_wait_time(const PhysicalNetwork& net, const QueueSnapshot& q, NodeId u) {
  const double mu = net.node(u).mu_mm_s;
  if (q.node_mm[u] == 0.0) return 0.0;
  if (!(mu > 0.0)) return std::numeric_limits<double>::infinity();
  return q.node_mm[u] / mu;
}

inline double link_wait(const PhysicalNetwork& net, const QueueSnapshot& q, const CostModel& cost, LinkId e) {
  return link_wait_time(net.link(e), q.link_bits[e], cost);
}

inline double path_service_time(const PhysicalNetwork& net, const DnnModel& model, const CostModel& cost,
                                const LayeredPath& path) {
  double s = 0.0;
  for (const auto& e : path.edges) s += edge_service_time(net, model, cost, e);
  return s;
}

// Single-job objective evaluated on a path: service time, plus link waiting
// per traversal, plus node waiting once per distinct compute node.
inline double fictitious_cost(const PhysicalNetwork& net, const DnnModel& model, const CostModel& cost,
                              const QueueSnapshot& q, const LayeredPath& path) {
  double total = 0.0;
  std::vector<char> charged(net.node_count(), 0);
  for (const auto& e : path.edges) {
    total += edge_service_time(net, model, cost, e);
    if (e.is_cross()) {
      if (!charged[e.component]) {
        charged[e.component] = 1;
        total += node_wait_time(net, q, e.component);
      }
    } else {
      total += link_wait(net, q, cost, e.component);
    }
  }
  return total;
}

// Adds the path's tasks to the queues of the components it uses.
inline void add_path_load(const PhysicalNetwork& net, const DnnModel& model, const CostModel& cost,
                          const LayeredPath& path, QueueSnapshot& q) {
  for (const auto& e : path.edges) {
    if (e.is_cross())
      q.node_mm[e.component] += edge_task(net, model, cost, e);
    else
      q.link_bits[e.component] += edge_task(net, model, cost, e);
  }
}

}  // namespace dnnsplit
