#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dnnsplit/errors.hpp"
#include "dnnsplit/plan.hpp"
#include "dnnsplit/topology.hpp"
#include "dnnsplit/workload.hpp"

// JSON readers and writers for networks, scenarios and route plans.

namespace dnnsplit::io {

using Json = nlohmann::ordered_json;

class ParseError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <class T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field '") + key + "': " + e.what());
  }
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline const Json& array(const Json& j, const char* key) {
  const auto& a = field(j, key);
  if (!a.is_array()) throw ParseError(std::string("field '") + key + "' must be an array");
  return a;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Network

inline Json to_json(const PhysicalNetwork& net) {
  Json nodes = Json::array();
  for (NodeId u = 0; u < net.node_count(); ++u) {
    const auto& n = net.node(u);
    Json o;
    o["id"] = u;
    o["mu_mm_s"] = n.mu_mm_s;
    o["mem_kb"] = n.mem_kb;
    o["cbar_mm"] = n.cbar_mm;
    o["q_mm"] = n.q_mm;
    if (n.pos) {
      o["x_m"] = n.pos->x;
      o["y_m"] = n.pos->y;
    }
    nodes.push_back(std::move(o));
  }
  Json links = Json::array();
  for (const auto& l : net.links()) {
    Json o;
    o["from"] = l.from;
    o["to"] = l.to;
    o["mu_bps"] = l.mu_bps;
    o["q_bits"] = l.q_bits;
    links.push_back(std::move(o));
  }
  Json out;
  out["nodes"] = std::move(nodes);
  out["links"] = std::move(links);
  return out;
}

inline PhysicalNetwork network_from_json(const Json& j) {
  using detail::get;
  using detail::get_or;
  PhysicalNetwork net;
  const auto& nodes = detail::array(j, "nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& o = nodes[i];
    if (get_or<std::size_t>(o, "id", i) != i) throw ParseError("node ids must be 0..n-1 in order");
    ComputeNode n;
    n.mu_mm_s = get<double>(o, "mu_mm_s");
    n.mem_kb = get_or<double>(o, "mem_kb", 0.0);
    n.cbar_mm = get_or<double>(o, "cbar_mm", 0.0);
    n.q_mm = get_or<double>(o, "q_mm", 0.0);
    if (o.contains("x_m") && o.contains("y_m")) n.pos = Point{get<double>(o, "x_m"), get<double>(o, "y_m")};
    net.add_node(n);
  }
  for (const auto& o : detail::array(j, "links"))
    net.add_link(get<NodeId>(o, "from"), get<NodeId>(o, "to"), get<double>(o, "mu_bps"),
                 get_or<double>(o, "q_bits", 0.0));
  return net;
}

// ---------------------------------------------------------------------------
// Models: a builtin name, "NAME/k" for the first k layers of a builtin, or a
// full object.

inline Json to_json(const DnnModel& m) {
  for (const auto& b : builtin_models()) {
    if (m == b) return b.name;
    for (std::uint32_t k = 1; k < b.layers(); ++k)
      if (m == truncate_model(b, k)) return m.name;
  }
  Json o;
  o["name"] = m.name;
  o["data_kb"] = m.data_kb;
  o["compute_mm"] = m.compute_mm;
  o["memory_kb"] = m.memory_kb;
  return o;
}

inline DnnModel model_from_json(const Json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    auto slash = s.find('/');
    if (slash == std::string::npos) return builtin_model(s);
    auto base = builtin_model(s.substr(0, slash));
    std::uint32_t k = 0;
    try {
      k = static_cast<std::uint32_t>(std::stoul(s.substr(slash + 1)));
    } catch (const std::exception&) {
      throw ParseError("bad truncated model name " + s);
    }
    return truncate_model(base, k);
  }
  DnnModel m;
  m.name = detail::get_or<std::string>(j, "name", "custom");
  m.data_kb = detail::get<std::vector<double>>(j, "data_kb");
  m.compute_mm = detail::get<std::vector<double>>(j, "compute_mm");
  m.memory_kb = detail::get<std::vector<double>>(j, "memory_kb");
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Scenario

inline Json to_json(const Scenario& sc) {
  Json params;
  params["n"] = sc.params.nodes;
  params["jobs"] = sc.params.jobs;
  params["gamma"] = sc.params.gamma;
  params["seed"] = sc.params.seed;
  if (sc.params.side_m) params["side_m"] = *sc.params.side_m;
  params["range_m"] = sc.params.range_m;
  params["symmetric"] = sc.params.symmetric_rates;
  Json jobs = Json::array();
  for (const auto& job : sc.jobs) {
    Json o;
    o["id"] = job.id;
    o["model"] = to_json(job.model);
    o["src"] = job.source;
    o["dst"] = job.destination;
    jobs.push_back(std::move(o));
  }
  Json cost;
  cost["zero_network_delay"] = sc.cost.zero_network_delay;
  if (sc.cost.mem_slowdown) cost["mem_slowdown"] = *sc.cost.mem_slowdown;
  Json out;
  out["params"] = std::move(params);
  out["network"] = to_json(sc.network);
  out["jobs"] = std::move(jobs);
  out["cost"] = std::move(cost);
  return out;
}

inline Scenario scenario_from_json(const Json& j) {
  using detail::get;
  using detail::get_or;
  Scenario sc;
  if (j.contains("params")) {
    const auto& p = detail::field(j, "params");
    sc.params.nodes = get_or<std::size_t>(p, "n", 0);
    sc.params.jobs = get_or<std::size_t>(p, "jobs", 0);
    sc.params.gamma = get_or<double>(p, "gamma", 1.0);
    sc.params.seed = get_or<std::uint64_t>(p, "seed", 0);
    if (p.contains("side_m")) sc.params.side_m = get<double>(p, "side_m");
    sc.params.range_m = get_or<double>(p, "range_m", 7.5);
    sc.params.symmetric_rates = get_or<bool>(p, "symmetric", false);
  }
  sc.network = network_from_json(detail::field(j, "network"));
  for (const auto& o : detail::array(j, "jobs")) {
    Job job;
    job.id = get<std::uint32_t>(o, "id");
    if (!o.contains("model")) throw ParseError("missing field 'model'");
    job.model = model_from_json(detail::field(o, "model"));
    job.source = get<NodeId>(o, "src");
    job.destination = get<NodeId>(o, "dst");
    sc.jobs.push_back(std::move(job));
  }
  if (j.contains("cost")) {
    const auto& c = j.at("cost");
    sc.cost.zero_network_delay = get_or<bool>(c, "zero_network_delay", false);
    if (c.contains("mem_slowdown") && !c.at("mem_slowdown").is_null())
      sc.cost.mem_slowdown = get<double>(c, "mem_slowdown");
  }
  if (sc.params.nodes == 0) sc.params.nodes = sc.network.node_count();
  if (sc.params.jobs == 0) sc.params.jobs = sc.jobs.size();
  sc.validate();
  return sc;
}

// ---------------------------------------------------------------------------
// Route plans

inline Json to_json(const LayeredEdge& e) {
  Json o;
  o["kind"] = e.is_cross() ? "cross" : "intra";
  o["layer"] = e.layer;
  o["component"] = e.component;
  return o;
}

inline LayeredEdge edge_from_json(const Json& o) {
  auto kind = detail::get<std::string>(o, "kind");
  auto layer = detail::get<std::uint32_t>(o, "layer");
  auto comp = detail::get<std::uint32_t>(o, "component");
  if (kind == "cross") return LayeredEdge::cross(layer, comp);
  if (kind == "intra") return LayeredEdge::intra(layer, comp);
  throw ParseError("edge kind must be 'intra' or 'cross'");
}

inline Json to_json(const PhysicalNetwork& net, const RouteEntry& e) {
  Json o;
  o["job"] = e.job;
  o["priority"] = e.priority;
  Json edges = Json::array();
  for (const auto& le : e.path.edges) edges.push_back(to_json(le));
  o["layered_edges"] = std::move(edges);
  auto phys = map_path_to_physical(net, e.path);
  Json compute = Json::object();
  for (std::size_t l = 0; l < phys.compute.size(); ++l) compute[std::to_string(l + 1)] = phys.compute[l];
  o["compute"] = std::move(compute);
  o["segments"] = phys.segments;
  o["c_fict_s"] = e.c_fict_s;
  o["c_actual_s"] = e.c_actual_s ? Json(*e.c_actual_s) : Json(nullptr);
  o["simple"] = e.simple;
  return o;
}

inline Json to_json(const PhysicalNetwork& net, const RoutePlan& plan) {
  Json arr = Json::array();
  for (const auto& e : plan.entries) arr.push_back(to_json(net, e));
  return arr;
}

// Reads a plan written by to_json; the scenario supplies the path endpoints.
inline RoutePlan plan_from_json(const Scenario& sc, const Json& j) {
  if (!j.is_array()) throw ParseError("plan must be a JSON array");
  RoutePlan plan;
  for (const auto& o : j) {
    RouteEntry e;
    e.job = detail::get<std::uint32_t>(o, "job");
    e.priority = detail::get<std::uint32_t>(o, "priority");
    if (e.job >= sc.jobs.size()) throw ParseError("plan refers to unknown job " + std::to_string(e.job));
    const auto& job = sc.jobs[e.job];
    e.path.source = job.source;
    e.path.destination = job.destination;
    e.path.layers = job.model.layers();
    for (const auto& le : detail::array(o, "layered_edges")) e.path.edges.push_back(edge_from_json(le));
    validate_path(sc.network, e.path);
    e.c_fict_s = detail::get_or<double>(o, "c_fict_s", 0.0);
    if (o.contains("c_actual_s") && !o.at("c_actual_s").is_null()) e.c_actual_s = detail::get<double>(o, "c_actual_s");
    e.simple = is_simple_in_physical(sc.network, e.path);
    plan.entries.push_back(std::move(e));
  }
  for (std::size_t p = 0; p < plan.entries.size(); ++p)
    if (plan.entries[p].priority != p) throw ParseError("plan entries must be listed in priority order");
  return plan;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

inline Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) { return scenario_from_json(parse(read_text(path))); }

inline void save_scenario(const std::string& path, const Scenario& sc) { write_text(path, to_json(sc).dump(2) + "\n"); }

}  // namespace dnnsplit::io
