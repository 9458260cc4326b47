#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnnsplit/errors.hpp"
#include "dnnsplit/rng.hpp"

namespace dnnsplit {

using NodeId = std::uint32_t;
using LinkId = std::uint32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct ComputeNode {
  double mu_mm_s = 0.0;  // 0 means the node cannot compute
  double mem_kb = 0.0;
  double cbar_mm = 0.0;
  double q_mm = 0.0;
  std::optional<Point> pos;
};

struct Link {
  NodeId from = 0;
  NodeId to = 0;
  double mu_bps = 0.0;
  double q_bits = 0.0;
};

// Directed graph of compute nodes and transmission links. Ids are dense and
// assigned in insertion order.
class PhysicalNetwork {
 public:
  NodeId add_node(ComputeNode node) {
    if (!(node.mu_mm_s >= 0.0) || !(node.q_mm >= 0.0) || !std::isfinite(node.mu_mm_s))
      throw InvalidNetwork("node rate and queue must be finite and non-negative");
    nodes_.push_back(node);
    out_.emplace_back();
    in_.emplace_back();
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  LinkId add_link(NodeId from, NodeId to, double mu_bps, double q_bits = 0.0) {
    if (from >= nodes_.size() || to >= nodes_.size())
      throw InvalidNetwork("link endpoint out of range");
    if (from == to) throw InvalidNetwork("self-loop link");
    if (!(mu_bps > 0.0) || !std::isfinite(mu_bps)) throw InvalidNetwork("link rate must be positive");
    if (!(q_bits >= 0.0)) throw InvalidNetwork("link queue must be non-negative");
    if (find_link(from, to)) throw InvalidNetwork("duplicate link");
    links_.push_back(Link{from, to, mu_bps, q_bits});
    auto id = static_cast<LinkId>(links_.size() - 1);
    out_[from].push_back(id);
    in_[to].push_back(id);
    return id;
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t link_count() const { return links_.size(); }

  const ComputeNode& node(NodeId u) const { return nodes_.at(u); }
  ComputeNode& node(NodeId u) { return nodes_.at(u); }
  const Link& link(LinkId e) const { return links_.at(e); }
  Link& link(LinkId e) { return links_.at(e); }

  std::span<const ComputeNode> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  std::span<const LinkId> out_links(NodeId u) const { return out_.at(u); }
  std::span<const LinkId> in_links(NodeId u) const { return in_.at(u); }

  std::optional<LinkId> find_link(NodeId from, NodeId to) const {
    if (from >= out_.size()) return std::nullopt;
    for (LinkId e : out_[from])
      if (links_[e].to == to) return e;
    return std::nullopt;
  }

  // Undirected neighbours, sorted and unique.
  std::vector<NodeId> neighbours(NodeId u) const {
    std::vector<NodeId> nb;
    for (LinkId e : out_.at(u)) nb.push_back(links_[e].to);
    for (LinkId e : in_.at(u)) nb.push_back(links_[e].from);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    return nb;
  }

  bool is_connected() const {
    if (nodes_.empty()) return true;
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : neighbours(u))
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    return count == nodes_.size();
  }

  // Directed reachability from `from`.
  std::vector<char> reachable_from(NodeId from) const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{from};
    seen.at(from) = 1;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (LinkId e : out_[u]) {
        NodeId v = links_[e].to;
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    return seen;
  }

  std::vector<char> reaching(NodeId to) const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<NodeId> stack{to};
    seen.at(to) = 1;
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (LinkId e : in_[v]) {
        NodeId u = links_[e].from;
        if (!seen[u]) {
          seen[u] = 1;
          stack.push_back(u);
        }
      }
    }
    return seen;
  }

  void validate() const {
    for (const auto& n : nodes_)
      if (!(n.mu_mm_s >= 0.0) || !(n.q_mm >= 0.0)) throw InvalidNetwork("negative node rate or queue");
    for (const auto& l : links_)
      if (!(l.q_bits >= 0.0) || !(l.mu_bps > 0.0)) throw InvalidNetwork("bad link rate or queue");
    if (!is_connected()) throw InvalidNetwork("network is not connected");
  }

 private:
  std::vector<ComputeNode> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<LinkId>> out_;
  std::vector<std::vector<LinkId>> in_;
};

// ---------------------------------------------------------------------------
// Layered graph

enum class EdgeKind : std::uint8_t { intra, cross };

// intra: copy of link `component` inside layer `layer`.
// cross: node `component` from layer-1 to layer, i.e. "layer computed here".
struct LayeredEdge {
  EdgeKind kind = EdgeKind::intra;
  std::uint32_t layer = 0;
  std::uint32_t component = 0;

  static constexpr LayeredEdge intra(std::uint32_t layer, LinkId link) {
    return {EdgeKind::intra, layer, link};
  }
  static constexpr LayeredEdge cross(std::uint32_t layer, NodeId node) {
    return {EdgeKind::cross, layer, node};
  }
  bool is_cross() const { return kind == EdgeKind::cross; }

  friend auto operator<=>(const LayeredEdge&, const LayeredEdge&) = default;
};

struct LayeredVertex {
  NodeId node = 0;
  std::uint32_t layer = 0;
  friend auto operator<=>(const LayeredVertex&, const LayeredVertex&) = default;
};

// (L+1) stacked copies of a physical network joined by cross-layer edges.
// Capacities and queues are read through to the physical network, so the
// graph must not outlive it.
class LayeredGraph {
 public:
  LayeredGraph(const PhysicalNetwork& net, std::uint32_t layers) : net_(&net), layers_(layers) {}

  const PhysicalNetwork& base() const { return *net_; }
  std::uint32_t layers() const { return layers_; }

  std::size_t vertex_count() const { return (layers_ + 1) * net_->node_count(); }
  std::size_t intra_edge_count() const { return (layers_ + 1) * net_->link_count(); }
  std::size_t cross_edge_count() const { return layers_ * net_->node_count(); }
  std::size_t edge_count() const { return intra_edge_count() + cross_edge_count(); }

  std::size_t vertex_id(LayeredVertex v) const { return v.layer * net_->node_count() + v.node; }
  LayeredVertex vertex(std::size_t id) const {
    auto n = net_->node_count();
    return {static_cast<NodeId>(id % n), static_cast<std::uint32_t>(id / n)};
  }

  // Intra edges first (layer-major), then cross edges (layer-major).
  std::size_t edge_id(LayeredEdge e) const {
    if (e.kind == EdgeKind::intra) return e.layer * net_->link_count() + e.component;
    return intra_edge_count() + (e.layer - 1) * net_->node_count() + e.component;
  }
  LayeredEdge edge(std::size_t id) const {
    if (id < intra_edge_count()) {
      auto m = net_->link_count();
      return LayeredEdge::intra(static_cast<std::uint32_t>(id / m), static_cast<LinkId>(id % m));
    }
    id -= intra_edge_count();
    auto n = net_->node_count();
    return LayeredEdge::cross(static_cast<std::uint32_t>(id / n + 1), static_cast<NodeId>(id % n));
  }

  bool contains(LayeredEdge e) const {
    if (e.kind == EdgeKind::intra) return e.layer <= layers_ && e.component < net_->link_count();
    return e.layer >= 1 && e.layer <= layers_ && e.component < net_->node_count();
  }

  LayeredVertex tail(LayeredEdge e) const {
    if (e.kind == EdgeKind::intra) return {net_->link(e.component).from, e.layer};
    return {e.component, e.layer - 1};
  }
  LayeredVertex head(LayeredEdge e) const {
    if (e.kind == EdgeKind::intra) return {net_->link(e.component).to, e.layer};
    return {e.component, e.layer};
  }

  // Edge capacity: link rate for intra edges, compute rate for cross edges.
  double capacity(LayeredEdge e) const {
    return e.kind == EdgeKind::intra ? net_->link(e.component).mu_bps : net_->node(e.component).mu_mm_s;
  }
  // Queue backlog of the underlying physical component.
  double queue(LayeredEdge e) const {
    return e.kind == EdgeKind::intra ? net_->link(e.component).q_bits : net_->node(e.component).q_mm;
  }

  std::vector<LayeredEdge> out_edges(LayeredVertex v) const {
    std::vector<LayeredEdge> out;
    for (LinkId e : net_->out_links(v.node)) out.push_back(LayeredEdge::intra(v.layer, e));
    if (v.layer < layers_) out.push_back(LayeredEdge::cross(v.layer + 1, v.node));
    return out;
  }
  std::vector<LayeredEdge> in_edges(LayeredVertex v) const {
    std::vector<LayeredEdge> in;
    for (LinkId e : net_->in_links(v.node)) in.push_back(LayeredEdge::intra(v.layer, e));
    if (v.layer > 0) in.push_back(LayeredEdge::cross(v.layer, v.node));
    return in;
  }

 private:
  const PhysicalNetwork* net_;
  std::uint32_t layers_;
};

inline LayeredGraph build_layered_graph(const PhysicalNetwork& net, std::uint32_t layers) {
  return LayeredGraph(net, layers);
}

// A route from (source, 0) to (destination, layers).
struct LayeredPath {
  NodeId source = 0;
  NodeId destination = 0;
  std::uint32_t layers = 0;
  std::vector<LayeredEdge> edges;

  friend bool operator==(const LayeredPath&, const LayeredPath&) = default;
};

// Physical reading of a layered path. compute[l-1] is the node running layer
// l; segments[l] is the ordered list of links carrying the output of layer l
// (segments[0] carries the input data).
struct PhysicalPlan {
  std::vector<NodeId> compute;
  std::vector<std::vector<LinkId>> segments;

  friend bool operator==(const PhysicalPlan&, const PhysicalPlan&) = default;
};

inline void validate_path(const PhysicalNetwork& net, const LayeredPath& path) {
  if (path.source >= net.node_count() || path.destination >= net.node_count())
    throw MalformedPath("path endpoint out of range");
  LayeredVertex at{path.source, 0};
  for (const auto& e : path.edges) {
    if (e.kind == EdgeKind::intra) {
      if (e.component >= net.link_count()) throw MalformedPath("unknown link in path");
      const auto& l = net.link(e.component);
      if (e.layer != at.layer || l.from != at.node) throw MalformedPath("intra edge does not continue the path");
      at.node = l.to;
    } else {
      if (e.component >= net.node_count()) throw MalformedPath("unknown node in path");
      if (e.component != at.node || e.layer != at.layer + 1)
        throw MalformedPath("cross edge does not continue the path");
      at.layer = e.layer;
    }
  }
  if (at.layer != path.layers || at.node != path.destination)
    throw MalformedPath("path does not end at the destination in the last layer");
}

inline PhysicalPlan map_path_to_physical(const PhysicalNetwork& net, const LayeredPath& path) {
  validate_path(net, path);
  PhysicalPlan plan;
  plan.segments.resize(path.layers + 1);
  for (const auto& e : path.edges) {
    if (e.is_cross())
      plan.compute.push_back(e.component);
    else
      plan.segments[e.layer].push_back(e.component);
  }
  return plan;
}

// Inverse of map_path_to_physical.
inline LayeredPath lift_to_layered(const PhysicalNetwork& net, const PhysicalPlan& plan, NodeId source,
                                   NodeId destination) {
  if (plan.segments.size() != plan.compute.size() + 1) throw MalformedPath("plan shape mismatch");
  LayeredPath path{source, destination, static_cast<std::uint32_t>(plan.compute.size()), {}};
  for (std::uint32_t l = 0; l < plan.segments.size(); ++l) {
    for (LinkId e : plan.segments[l]) path.edges.push_back(LayeredEdge::intra(l, e));
    if (l < plan.compute.size()) path.edges.push_back(LayeredEdge::cross(l + 1, plan.compute[l]));
  }
  validate_path(net, path);
  return path;
}

// Sequence of physical nodes visited; consecutive layers computed at one node
// count as one visit.
inline std::vector<NodeId> physical_walk(const PhysicalNetwork& net, const LayeredPath& path) {
  validate_path(net, path);
  std::vector<NodeId> walk{path.source};
  for (const auto& e : path.edges)
    if (!e.is_cross()) walk.push_back(net.link(e.component).to);
  return walk;
}

// True iff no physical node is visited twice. When source == destination the
// closing return to the source is allowed.
inline bool is_simple_in_physical(const PhysicalNetwork& net, const LayeredPath& path) {
  auto walk = physical_walk(net, path);
  if (path.source == path.destination && walk.size() > 1 && walk.back() == walk.front()) walk.pop_back();
  std::vector<char> seen(net.node_count(), 0);
  for (NodeId u : walk) {
    if (seen[u]) return false;
    seen[u] = 1;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Generation and graph measures

struct GeometricOptions {
  double side_m = 30.0;
  double range_m = 7.5;
  double link_rate_bps = 72.2e6;
  std::size_t max_attempts = 10000;
};

// Uniform placement on [0, side]^2, bidirectional link pair iff the distance
// is within range. Disconnected draws are discarded.
inline PhysicalNetwork generate_random_geometric(std::size_t n, std::uint64_t seed,
                                                 const GeometricOptions& opt = {}) {
  if (n < 2) throw GenerationFailed("need at least two nodes");
  for (std::size_t attempt = 0; attempt < opt.max_attempts; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, {attempt}));
    std::uniform_real_distribution<double> coord(0.0, opt.side_m);
    PhysicalNetwork net;
    for (std::size_t i = 0; i < n; ++i) {
      ComputeNode node;
      double x = coord(rng);
      double y = coord(rng);
      node.pos = Point{x, y};
      net.add_node(node);
    }
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v) {
        auto pu = *net.node(u).pos;
        auto pv = *net.node(v).pos;
        if (std::hypot(pu.x - pv.x, pu.y - pv.y) <= opt.range_m) {
          net.add_link(u, v, opt.link_rate_bps);
          net.add_link(v, u, opt.link_rate_bps);
        }
      }
    if (net.is_connected()) return net;
  }
  throw GenerationFailed("no connected geometric graph within the attempt budget");
}

namespace detail {

// Unit-capacity max flow on the undirected simple view (Edmonds-Karp).
inline int undirected_unit_max_flow(const std::vector<std::vector<NodeId>>& adj, NodeId s, NodeId t) {
  auto n = adj.size();
  std::vector<std::vector<int>> cap(n, std::vector<int>(n, 0));
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v : adj[u]) cap[u][v] = 1;
  int flow = 0;
  while (true) {
    std::vector<int> parent(n, -1);
    parent[s] = static_cast<int>(s);
    std::queue<NodeId> q;
    q.push(s);
    while (!q.empty() && parent[t] < 0) {
      NodeId u = q.front();
      q.pop();
      for (NodeId v = 0; v < n; ++v)
        if (parent[v] < 0 && cap[u][v] > 0) {
          parent[v] = static_cast<int>(u);
          q.push(v);
        }
    }
    if (parent[t] < 0) return flow;
    for (NodeId v = t; v != s; v = static_cast<NodeId>(parent[v])) {
      auto u = static_cast<NodeId>(parent[v]);
      cap[u][v] -= 1;
      cap[v][u] += 1;
    }
    ++flow;
  }
}

}  // namespace detail

// Edge connectivity of the undirected view: min over node pairs of the
// unit-capacity max flow. A single node has connectivity 0.
inline int edge_connectivity(const PhysicalNetwork& net) {
  auto n = net.node_count();
  if (n < 2) return 0;
  std::vector<std::vector<NodeId>> adj(n);
  for (NodeId u = 0; u < n; ++u) adj[u] = net.neighbours(u);
  int k = std::numeric_limits<int>::max();
  // For undirected graphs fixing one side of the cut at node 0 suffices.
  for (NodeId t = 1; t < n; ++t) k = std::min(k, detail::undirected_unit_max_flow(adj, 0, t));
  return k;
}

struct HopExtremes {
  int shortest = 0;
  int longest = 0;
  bool longest_exact = true;
};

// Shortest hop count by BFS; longest simple-path hop count by exhaustive
// search when the network has at most `exact_limit` nodes, else |V|-1.
inline HopExtremes hop_path_extremes(const PhysicalNetwork& net, NodeId s, NodeId t,
                                     std::size_t exact_limit = 15) {
  auto n = net.node_count();
  if (s >= n || t >= n) throw InvalidNetwork("hop query endpoint out of range");
  HopExtremes out;
  if (s == t) return out;

  std::vector<int> dist(n, -1);
  std::queue<NodeId> q;
  dist[s] = 0;
  q.push(s);
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop();
    for (LinkId e : net.out_links(u)) {
      NodeId v = net.link(e).to;
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  if (dist[t] < 0) throw InvalidNetwork("destination unreachable");
  out.shortest = dist[t];

  if (n > exact_limit) {
    out.longest = static_cast<int>(n) - 1;
    out.longest_exact = false;
    return out;
  }
  std::vector<char> on_path(n, 0);
  int best = 0;
  auto dfs = [&](auto&& self, NodeId u, int depth) -> void {
    if (u == t) {
      best = std::max(best, depth);
      return;
    }
    if (best == static_cast<int>(n) - 1) return;
    on_path[u] = 1;
    for (LinkId e : net.out_links(u)) {
      NodeId v = net.link(e).to;
      if (!on_path[v]) self(self, v, depth + 1);
    }
    on_path[u] = 0;
  };
  dfs(dfs, s, 0);
  out.longest = best;
  return out;
}

// Fewest-hop directed path from s to t as a link list; ties resolved toward
// lower link ids.
inline std::vector<LinkId> shortest_hop_path(const PhysicalNetwork& net, NodeId s, NodeId t) {
  if (s == t) return {};
  auto n = net.node_count();
  std::vector<int> via(n, -1);
  std::vector<char> seen(n, 0);
  std::queue<NodeId> q;
  seen[s] = 1;
  q.push(s);
  while (!q.empty()) {
    NodeId u = q.front();
    q.pop();
    if (u == t) break;
    for (LinkId e : net.out_links(u)) {
      NodeId v = net.link(e).to;
      if (!seen[v]) {
        seen[v] = 1;
        via[v] = static_cast<int>(e);
        q.push(v);
      }
    }
  }
  if (!seen[t]) throw InfeasibleTopology("no directed path between nodes");
  std::vector<LinkId> path;
  for (NodeId v = t; v != s;) {
    auto e = static_cast<LinkId>(via[v]);
    path.push_back(e);
    v = net.link(e).from;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace dnnsplit
