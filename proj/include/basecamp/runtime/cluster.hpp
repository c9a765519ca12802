#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace basecamp::runtime {

using json = nlohmann::ordered_json;

enum class NodeKind { cpu, fpga };

inline const char* to_string(NodeKind k) { return k == NodeKind::cpu ? "cpu" : "fpga"; }

// Times are µs and bandwidths MB/s (bytes per µs).
struct NodeSpec {
  std::string id;
  NodeKind kind = NodeKind::cpu;
  int cores = 0;
  int vf_count = 0;  // fpga nodes only
  double bandwidth = 0;
  double latency = 0;
};

struct ScriptedFailure {
  double time = 0;
  std::string node;
};

struct ClusterSpec {
  std::vector<NodeSpec> nodes;
  std::vector<ScriptedFailure> failures;

  std::size_t index_of(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    throw std::out_of_range("unknown node '" + id + "'");
  }
};

class ClusterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void validate(const ClusterSpec& c) {
  std::set<std::string> ids;
  for (const auto& n : c.nodes) {
    if (!ids.insert(n.id).second) throw ClusterError("duplicate node id '" + n.id + "'");
    if (!(n.bandwidth > 0)) throw ClusterError("node '" + n.id + "': bandwidth must be > 0");
    if (n.latency < 0) throw ClusterError("node '" + n.id + "': latency must be >= 0");
    if (n.cores < 0 || n.vf_count < 0) throw ClusterError("node '" + n.id + "': negative capacity");
    if (n.kind == NodeKind::cpu && n.vf_count != 0) throw ClusterError("node '" + n.id + "': cpu nodes have no VFs");
  }
  for (const auto& f : c.failures) {
    if (!ids.count(f.node)) throw ClusterError("failure script names unknown node '" + f.node + "'");
    if (f.time < 0) throw ClusterError("failure script has a negative time");
  }
}

/// Moving `bytes` between two nodes runs at the slower endpoint's bandwidth
/// and pays the larger latency. Colocated data moves for free.
inline double transfer_time(const NodeSpec& a, const NodeSpec& b, double bytes) {
  if (a.id == b.id) return 0.0;
  return bytes / std::min(a.bandwidth, b.bandwidth) + std::max(a.latency, b.latency);
}

inline json to_json(const ClusterSpec& c) {
  json nodes = json::array();
  for (const auto& n : c.nodes) {
    json j = {{"id", n.id}, {"kind", to_string(n.kind)}, {"cores", n.cores}};
    if (n.kind == NodeKind::fpga) j["vf_count"] = n.vf_count;
    j["bandwidth"] = n.bandwidth;
    j["latency"] = n.latency;
    nodes.push_back(j);
  }
  json out = {{"nodes", nodes}};
  if (!c.failures.empty()) {
    json f = json::array();
    for (const auto& x : c.failures) f.push_back({{"time", x.time}, {"node", x.node}});
    out["failures"] = f;
  }
  return out;
}

inline ClusterSpec cluster_from_json(const json& j) {
  ClusterSpec c;
  try {
    for (const auto& n : j.at("nodes")) {
      NodeSpec s;
      s.id = n.at("id").get<std::string>();
      std::string kind = n.at("kind").get<std::string>();
      if (kind == "cpu") {
        s.kind = NodeKind::cpu;
      } else if (kind == "fpga") {
        s.kind = NodeKind::fpga;
      } else {
        throw ClusterError("node '" + s.id + "': unknown kind '" + kind + "'");
      }
      s.cores = n.value("cores", 0);
      s.vf_count = n.value("vf_count", 0);
      s.bandwidth = n.at("bandwidth").get<double>();
      s.latency = n.value("latency", 0.0);
      c.nodes.push_back(s);
    }
    if (j.contains("failures"))
      for (const auto& f : j.at("failures")) c.failures.push_back({f.at("time").get<double>(), f.at("node").get<std::string>()});
  } catch (const json::exception& e) {
    throw ClusterError(std::string("malformed cluster JSON: ") + e.what());
  }
  validate(c);
  return c;
}

}  // namespace basecamp::runtime
