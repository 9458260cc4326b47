#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "test_util.hpp"

using namespace dnnsplit;
using namespace testutil;

TEST(LayeredGraph, TwoNodeCounts) {
  PhysicalNetwork net;
  net.add_node(node(1));
  net.add_node(node(1));
  both_ways(net, 0, 1, 1e6);
  auto g = build_layered_graph(net, 1);
  EXPECT_EQ(g.vertex_count(), 4u);
  EXPECT_EQ(g.edge_count(), 6u);
}

TEST(LayeredGraph, ZeroLayersIsACopy) {
  auto net = complete(4);
  auto g = build_layered_graph(net, 0);
  EXPECT_EQ(g.vertex_count(), net.node_count());
  EXPECT_EQ(g.edge_count(), net.link_count());
  EXPECT_EQ(g.cross_edge_count(), 0u);
}

TEST(LayeredGraph, TwentyNodeCounts) {
  // 35 undirected pairs give 70 directed links.
  PhysicalNetwork net;
  for (int i = 0; i < 20; ++i) net.add_node(node(1));
  int pairs = 0;
  for (NodeId u = 0; u < 20 && pairs < 35; ++u)
    for (NodeId v = u + 1; v < 20 && pairs < 35; ++v, ++pairs) both_ways(net, u, v, 1e6);
  ASSERT_EQ(net.link_count(), 70u);
  auto g = build_layered_graph(net, 9);
  EXPECT_EQ(g.vertex_count(), 200u);
  EXPECT_EQ(g.edge_count(), 880u);
}

TEST(LayeredGraph, EdgeIdsAreABijection) {
  auto net = complete(3);
  auto g = build_layered_graph(net, 2);
  std::set<std::size_t> ids;
  for (std::size_t id = 0; id < g.edge_count(); ++id) {
    auto e = g.edge(id);
    EXPECT_TRUE(g.contains(e));
    EXPECT_EQ(g.edge_id(e), id);
    ids.insert(id);
    if (e.is_cross()) {
      EXPECT_EQ(g.tail(e).node, g.head(e).node);
      EXPECT_EQ(g.tail(e).layer + 1, g.head(e).layer);
    } else {
      EXPECT_EQ(g.tail(e).layer, g.head(e).layer);
    }
  }
  EXPECT_EQ(ids.size(), g.edge_count());
  for (std::size_t v = 0; v < g.vertex_count(); ++v) EXPECT_EQ(g.vertex_id(g.vertex(v)), v);
}

TEST(LayeredGraph, QueuesAndCapacitiesReadThrough) {
  auto net = complete(3, 7.0, 2e6);
  auto g = build_layered_graph(net, 3);
  net.node(1).q_mm = 42.0;
  net.link(2).q_bits = 99.0;
  for (std::uint32_t l = 1; l <= 3; ++l) {
    EXPECT_EQ(g.queue(LayeredEdge::cross(l, 1)), 42.0);
    EXPECT_EQ(g.capacity(LayeredEdge::cross(l, 1)), 7.0);
  }
  for (std::uint32_t l = 0; l <= 3; ++l) {
    EXPECT_EQ(g.queue(LayeredEdge::intra(l, 2)), 99.0);
    EXPECT_EQ(g.capacity(LayeredEdge::intra(l, 2)), 2e6);
  }
}

TEST(Network, RejectsInvalidElements) {
  PhysicalNetwork net;
  net.add_node(node(1));
  net.add_node(node(1));
  EXPECT_THROW(net.add_link(0, 0, 1e6), InvalidNetwork);
  EXPECT_THROW(net.add_link(0, 5, 1e6), InvalidNetwork);
  EXPECT_THROW(net.add_link(0, 1, 0.0), InvalidNetwork);
  EXPECT_THROW(net.add_link(0, 1, 1e6, -1.0), InvalidNetwork);
  EXPECT_THROW(net.add_node(node(-1.0)), InvalidNetwork);
  net.add_link(0, 1, 1e6);
  EXPECT_THROW(net.add_link(0, 1, 1e6), InvalidNetwork);
  net.add_node(node(1));
  EXPECT_THROW(net.validate(), InvalidNetwork);  // node 2 is isolated
}

TEST(PathMapping, ComputeElsewhereAndReturn) {
  // s(0) <-> u(1), s = t: input s->u, layer 1 at u, output u->s.
  PhysicalNetwork net;
  net.add_node(node(1));
  net.add_node(node(1));
  both_ways(net, 0, 1, 1e6);
  LayeredPath p{0, 0, 1, {LayeredEdge::intra(0, 0), LayeredEdge::cross(1, 1), LayeredEdge::intra(1, 1)}};
  auto plan = map_path_to_physical(net, p);
  ASSERT_EQ(plan.compute.size(), 1u);
  EXPECT_EQ(plan.compute[0], 1u);
  EXPECT_EQ(plan.segments[0], std::vector<LinkId>{0});
  EXPECT_EQ(plan.segments[1], std::vector<LinkId>{1});
  EXPECT_TRUE(is_simple_in_physical(net, p));
  EXPECT_EQ(lift_to_layered(net, plan, 0, 0), p);
}

TEST(PathMapping, CrossOnlyPath) {
  PhysicalNetwork net;
  net.add_node(node(1));
  net.add_node(node(1));
  both_ways(net, 0, 1, 1e6);
  LayeredPath p{0, 0, 1, {LayeredEdge::cross(1, 0)}};
  auto plan = map_path_to_physical(net, p);
  EXPECT_EQ(plan.compute, std::vector<NodeId>{0});
  EXPECT_TRUE(plan.segments[0].empty());
  EXPECT_TRUE(plan.segments[1].empty());
  EXPECT_TRUE(is_simple_in_physical(net, p));
}

TEST(PathMapping, MalformedPathsAreRejected) {
  auto net = path_graph(3);
  // Cross edge skipping a layer.
  EXPECT_THROW(map_path_to_physical(net, LayeredPath{0, 0, 2, {LayeredEdge::cross(2, 0)}}), MalformedPath);
  // Intra edge not starting where the path stands.
  EXPECT_THROW(map_path_to_physical(net, LayeredPath{0, 0, 1, {LayeredEdge::intra(0, 2), LayeredEdge::cross(1, 1)}}),
               MalformedPath);
  // Ends at the wrong node.
  EXPECT_THROW(map_path_to_physical(net, LayeredPath{0, 1, 1, {LayeredEdge::cross(1, 0)}}), MalformedPath);
}

TEST(PathMapping, RevisitAcrossLayersIsNotSimple) {
  // Path graph 0-1-2; links: 0:(0,1) 1:(1,0) 2:(1,2) 3:(2,1).
  auto net = path_graph(3);
  // Input 0->1, layer 1 at 1, output 1->0->1->2: node 1 and 0 repeat.
  LayeredPath p{0,
                2,
                1,
                {LayeredEdge::intra(0, 0), LayeredEdge::cross(1, 1), LayeredEdge::intra(1, 1), LayeredEdge::intra(1, 0),
                 LayeredEdge::intra(1, 2)}};
  EXPECT_FALSE(is_simple_in_physical(net, p));
  // Consecutive layers at one node count once.
  LayeredPath q{0, 2, 2, {LayeredEdge::intra(0, 0), LayeredEdge::cross(1, 1), LayeredEdge::cross(2, 1), LayeredEdge::intra(2, 2)}};
  EXPECT_TRUE(is_simple_in_physical(net, q));
  // Segments of two layers passing through the same node 1.
  LayeredPath r{0,
                0,
                2,
                {LayeredEdge::cross(1, 0), LayeredEdge::intra(1, 0), LayeredEdge::intra(1, 2), LayeredEdge::cross(2, 2),
                 LayeredEdge::intra(2, 3), LayeredEdge::intra(2, 1)}};
  EXPECT_FALSE(is_simple_in_physical(net, r));
}

TEST(PathMapping, RandomRoundTrip) {
  std::mt19937_64 rng(5);
  auto net = complete(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint32_t L = 1 + rng() % 3;
    const NodeId s = rng() % 4, t = rng() % 4;
    PhysicalPlan plan;
    NodeId at = s;
    for (std::uint32_t l = 0; l <= L; ++l) {
      NodeId to = l < L ? static_cast<NodeId>(rng() % 4) : t;
      std::vector<LinkId> seg;
      if (at != to) seg.push_back(*net.find_link(at, to));
      plan.segments.push_back(seg);
      if (l < L) plan.compute.push_back(to);
      at = to;
    }
    auto path = lift_to_layered(net, plan, s, t);
    EXPECT_EQ(map_path_to_physical(net, path), plan);
  }
}

TEST(Connectivity, SmallGraphs) {
  PhysicalNetwork tri = complete(3);
  EXPECT_EQ(edge_connectivity(tri), 2);
  EXPECT_EQ(edge_connectivity(path_graph(3)), 1);
  EXPECT_EQ(edge_connectivity(complete(4)), 3);
}

// Brute force: smallest set of undirected edges whose removal disconnects.
static int brute_connectivity(const PhysicalNetwork& net) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& l : net.links())
    if (l.from < l.to) edges.push_back({l.from, l.to});
  const auto m = edges.size();
  int best = static_cast<int>(m);
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    int removed = __builtin_popcount(mask);
    if (removed >= best) continue;
    PhysicalNetwork g;
    for (std::size_t i = 0; i < net.node_count(); ++i) g.add_node(node(1));
    for (std::size_t i = 0; i < m; ++i)
      if (!(mask >> i & 1u)) both_ways(g, edges[i].first, edges[i].second, 1e6);
    if (!g.is_connected()) best = removed;
  }
  return best;
}

TEST(Connectivity, CompleteGraphsMatchBruteForce) {
  for (std::size_t n = 2; n <= 5; ++n) {
    auto net = complete(n);
    EXPECT_EQ(edge_connectivity(net), static_cast<int>(n) - 1);
    EXPECT_EQ(brute_connectivity(net), static_cast<int>(n) - 1);
  }
}

TEST(Connectivity, RandomGraphsMatchBruteForce) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    GeometricOptions o;
    o.side_m = 9.0;
    auto net = generate_random_geometric(5, seed, o);
    EXPECT_EQ(edge_connectivity(net), brute_connectivity(net)) << "seed " << seed;
  }
}

TEST(HopExtremes, SmallGraphs) {
  auto p = hop_path_extremes(path_graph(3), 0, 2);
  EXPECT_EQ(p.shortest, 2);
  EXPECT_EQ(p.longest, 2);
  auto t = hop_path_extremes(complete(3), 0, 1);
  EXPECT_EQ(t.shortest, 1);
  EXPECT_EQ(t.longest, 2);
  auto k = hop_path_extremes(complete(4), 0, 3);
  EXPECT_EQ(k.shortest, 1);
  EXPECT_EQ(k.longest, 3);
  EXPECT_TRUE(k.longest_exact);
  auto big = hop_path_extremes(path_graph(20), 0, 19);
  EXPECT_EQ(big.longest, 19);
  EXPECT_FALSE(big.longest_exact);
}

TEST(Geometric, TwoNodesAlwaysConnected) {
  GeometricOptions o;
  o.side_m = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto net = generate_random_geometric(2, seed, o);
    EXPECT_EQ(net.link_count(), 2u);
    EXPECT_TRUE(net.is_connected());
  }
}

TEST(Geometric, DeterministicConnectedAndWithinRange) {
  GeometricOptions o;
  auto a = generate_random_geometric(20, 42, o);
  auto b = generate_random_geometric(20, 42, o);
  EXPECT_EQ(io::to_json(a).dump(), io::to_json(b).dump());
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto net = generate_random_geometric(20, seed, o);
    EXPECT_TRUE(net.is_connected());
    for (const auto& l : net.links()) {
      auto p = *net.node(l.from).pos, q = *net.node(l.to).pos;
      EXPECT_LE(std::hypot(p.x - q.x, p.y - q.y), o.range_m);
      EXPECT_TRUE(net.find_link(l.to, l.from).has_value());
    }
  }
}

TEST(Geometric, FailsWhenNoConnectedDrawExists) {
  GeometricOptions o;
  o.side_m = 1000.0;
  o.range_m = 0.001;
  o.max_attempts = 5;
  EXPECT_THROW(generate_random_geometric(10, 1, o), GenerationFailed);
}

TEST(ShortestHop, PrefersFewestHops) {
  auto net = complete(4);
  auto p = shortest_hop_path(net, 0, 3);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(net.link(p[0]).to, 3u);
  EXPECT_TRUE(shortest_hop_path(net, 2, 2).empty());
  EXPECT_EQ(shortest_hop_path(path_graph(5), 0, 4).size(), 4u);
}

TEST(NetworkIo, RoundTrip) {
  auto net = generate_random_geometric(8, 3);
  net.node(2).q_mm = 12.5;
  net.link(1).q_bits = 1e5;
  auto j = io::to_json(net);
  auto back = io::network_from_json(j);
  EXPECT_EQ(io::to_json(back).dump(), j.dump());
  EXPECT_TRUE(j["nodes"][0].contains("mu_mm_s"));
  EXPECT_TRUE(j["links"][0].contains("mu_bps"));
}
