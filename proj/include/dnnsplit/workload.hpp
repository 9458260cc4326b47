#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dnnsplit/errors.hpp"
#include "dnnsplit/rng.hpp"
#include "dnnsplit/topology.hpp"
#include "dnnsplit/units.hpp"

namespace dnnsplit {

// Per-layer requirements of a feedforward model. data_kb[0] is the input
// size, data_kb[l] the output of layer l. compute_mm and memory_kb are
// indexed by layer-1.
struct DnnModel {
  std::string name;
  std::vector<double> data_kb;
  std::vector<double> compute_mm;
  std::vector<double> memory_kb;

  std::uint32_t layers() const { return static_cast<std::uint32_t>(compute_mm.size()); }
  double d(std::uint32_t l) const { return data_kb.at(l); }
  double c(std::uint32_t l) const { return compute_mm.at(l - 1); }
  double m(std::uint32_t l) const { return memory_kb.at(l - 1); }

  double total_compute_mm() const {
    double s = 0.0;
    for (double c : compute_mm) s += c;
    return s;
  }

  void validate() const {
    if (compute_mm.empty()) throw InvalidModel(name + ": model has no layers");
    if (data_kb.size() != compute_mm.size() + 1 || memory_kb.size() != compute_mm.size())
      throw InvalidModel(name + ": inconsistent layer vectors");
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    for (double v : data_kb)
      if (!positive(v)) throw InvalidModel(name + ": data size must be positive");
    for (double v : compute_mm)
      if (!positive(v)) throw InvalidModel(name + ": compute load must be positive");
    for (double v : memory_kb)
      if (!positive(v)) throw InvalidModel(name + ": memory must be positive");
  }

  friend bool operator==(const DnnModel&, const DnnModel&) = default;
};

struct NodeType {
  std::string name;
  double cbar_mm;
  double mem_mb;
  double mu_mm_s;
};

// CNN models with compressed layers (SevenLayerNet, AlexNet, ResNet101).
inline std::array<DnnModel, 3> builtin_models() {
  return {{
      {"SLN",
       {9.41, 50.18, 12.54, 1.54, 0.77, 0.04},
       {3.81, 20.08, 1.20, 0.07, 0.002},
       {19.20, 409.60, 4816.90, 294.91, 7.68}},
      {"AN",
       {618.35, 279.94, 173.06, 259.58, 259.58, 36.86, 16.38, 16.38, 4.00},
       {105.73, 224.34, 149.52, 112.14, 74.84, 37.75, 16.78, 4.10},
       {139.78, 1229.82, 3540.48, 2655.74, 1770.50, 151011.39, 67125.25, 16388.00}},
      {"RN",
       {602.12, 802.82, 802.82, 200.71, 50.18, 50.18, 50.18, 50.18, 12.54, 4.00},
       {118.01, 616.56, 757.86, 950.53, 1156.06, 1156.06, 1156.06, 565.18, 2.20},
       {37.63, 786.43, 2228.22, 21757.95, 26738.69, 26738.69, 26738.69, 51380.22, 8388.61}},
  }};
}

inline DnnModel builtin_model(std::string_view name) {
  for (auto& m : builtin_models())
    if (m.name == name) return m;
  throw InvalidModel("unknown model " + std::string(name));
}

// IoT boards: Orange Pi Zero, Beaglebone AI, Raspberry Pi 3.
inline std::array<NodeType, 3> builtin_node_types() {
  return {{
      {"OPZ", 100000.0, 524.288, 360.0},
      {"BAI", 100000.0, 131.072, 480.0},
      {"RP3", 100000.0, 524.288, 560.0},
  }};
}

inline ComputeNode make_node(const NodeType& type) {
  ComputeNode n;
  n.mu_mm_s = type.mu_mm_s;
  n.mem_kb = units::mb_to_kb(type.mem_mb);
  n.cbar_mm = type.cbar_mm;
  return n;
}

// First `layers` layers of a model; the output of the last kept layer becomes
// the delivered result.
inline DnnModel truncate_model(const DnnModel& model, std::uint32_t layers) {
  if (layers == 0 || layers > model.layers()) throw InvalidModel("bad truncation length");
  DnnModel out;
  out.name = model.name + "/" + std::to_string(layers);
  out.data_kb.assign(model.data_kb.begin(), model.data_kb.begin() + layers + 1);
  out.compute_mm.assign(model.compute_mm.begin(), model.compute_mm.begin() + layers);
  out.memory_kb.assign(model.memory_kb.begin(), model.memory_kb.begin() + layers);
  return out;
}

struct Job {
  std::uint32_t id = 0;
  DnnModel model;
  NodeId source = 0;
  NodeId destination = 0;
};

// How service and waiting times are charged.
struct CostModel {
  // Transmission and link waiting are treated as zero.
  bool zero_network_delay = false;
  // Slowdown factor for layers whose memory exceeds the node's memory.
  std::optional<double> mem_slowdown;

  friend bool operator==(const CostModel&, const CostModel&) = default;
};

struct ScenarioParams {
  std::size_t nodes = 20;
  std::size_t jobs = 5;
  double gamma = 1.0;
  std::uint64_t seed = 1;
  // Unset: 30 m for n >= 50, shrunk for smaller n to keep the node density of
  // 50 nodes in 30 m x 30 m.
  std::optional<double> side_m;
  double range_m = 7.5;
  bool symmetric_rates = false;
};

struct Scenario {
  ScenarioParams params;
  PhysicalNetwork network;
  std::vector<Job> jobs;
  CostModel cost;

  std::uint32_t max_layers() const {
    std::uint32_t L = 0;
    for (const auto& j : jobs) L = std::max(L, j.model.layers());
    return L;
  }

  void validate() const {
    network.validate();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const auto& j = jobs[i];
      if (j.id != i) throw InvalidModel("job ids must equal their index");
      j.model.validate();
      if (j.source >= network.node_count() || j.destination >= network.node_count())
        throw InvalidModel("job endpoint not in network");
    }
  }
};

inline constexpr double wifi4_max_rate_mbps = 72.2;

inline double default_side_m(std::size_t n) {
  return 30.0 * std::sqrt(std::min<double>(static_cast<double>(n), 50.0) / 50.0);
}

// Random geometric network, rates {1..5} * gamma * 72.2/5 Mbps per directed
// link, uniformly drawn node types and models, uniform (s, t) with s == t
// allowed.
inline Scenario generate_scenario(const ScenarioParams& p) {
  if (p.nodes < 2) throw GenerationFailed("need at least two nodes");
  if (p.jobs < 1) throw GenerationFailed("need at least one job");
  if (!(p.gamma > 0.0)) throw GenerationFailed("gamma must be positive");

  GeometricOptions geo;
  geo.side_m = p.side_m.value_or(default_side_m(p.nodes));
  geo.range_m = p.range_m;
  Scenario sc;
  sc.params = p;
  sc.network = generate_random_geometric(p.nodes, derive_seed(p.seed, {1}), geo);

  std::mt19937_64 rng(derive_seed(p.seed, {2}));
  std::uniform_int_distribution<int> level(1, 5);
  const double step_bps = units::mbps_to_bps(p.gamma * wifi4_max_rate_mbps / 5.0);
  auto& net = sc.network;
  // The generator adds (u,v) before (v,u) for u < v, so the reverse rate is
  // already drawn when symmetric mode copies it.
  for (LinkId e = 0; e < net.link_count(); ++e) {
    auto& l = net.link(e);
    if (p.symmetric_rates && l.from > l.to) {
      l.mu_bps = net.link(*net.find_link(l.to, l.from)).mu_bps;
      continue;
    }
    l.mu_bps = level(rng) * step_bps;
  }

  auto types = builtin_node_types();
  std::uniform_int_distribution<int> pick3(0, 2);
  for (NodeId u = 0; u < net.node_count(); ++u) {
    auto pos = net.node(u).pos;
    net.node(u) = make_node(types[pick3(rng)]);
    net.node(u).pos = pos;
  }

  auto models = builtin_models();
  std::uniform_int_distribution<NodeId> pick_node(0, static_cast<NodeId>(p.nodes - 1));
  for (std::uint32_t j = 0; j < p.jobs; ++j) {
    Job job;
    job.id = j;
    job.model = models[pick3(rng)];
    job.source = pick_node(rng);
    job.destination = pick_node(rng);
    sc.jobs.push_back(std::move(job));
  }
  return sc;
}

// ---------------------------------------------------------------------------
// Service times

inline double compute_time(const ComputeNode& node, double mm) {
  if (mm == 0.0) return 0.0;
  if (!(node.mu_mm_s > 0.0)) throw ZeroRate("compute requested at a node with zero rate");
  return mm / node.mu_mm_s;
}

inline double transmission_time(const Link& link, double kb) { return units::kb_to_bits(kb) / link.mu_bps; }

// Compute load of layer l of `model` when run at `node`, including the memory
// slowdown when enabled.
inline double effective_compute_mm(const DnnModel& model, std::uint32_t l, const ComputeNode& node,
                                   const CostModel& cost) {
  double c = model.c(l);
  if (cost.mem_slowdown && model.m(l) > node.mem_kb) c *= 1.0 + *cost.mem_slowdown;
  return c;
}

inline double link_service_time(const Link& link, double kb, const CostModel& cost) {
  return cost.zero_network_delay ? 0.0 : transmission_time(link, kb);
}

inline double link_wait_time(const Link& link, double q_bits, const CostModel& cost) {
  return cost.zero_network_delay ? 0.0 : q_bits / link.mu_bps;
}

}  // namespace dnnsplit
