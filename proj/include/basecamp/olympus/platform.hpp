#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace basecamp::olympus {

using json = nlohmann::ordered_json;

enum class PlatformKind { pcie_attached, network_attached };

inline const char* to_string(PlatformKind k) {
  return k == PlatformKind::pcie_attached ? "pcie-attached" : "network-attached";
}

// Bandwidths are MB/s, which is the same as bytes per microsecond.
struct MemoryChannel {
  int width = 0;  // bits
  double bandwidth = 0;
};

struct HostLink {
  double bandwidth = 0;
  double latency = 0;  // µs
};

struct PlatformSpec {
  std::string name;
  PlatformKind kind = PlatformKind::pcie_attached;
  std::vector<MemoryChannel> channels;
  double clock = 0;  // MHz
  std::int64_t onchip_memory = 0;
  int compute_slots = 0;
  HostLink host_link;
  int vf_count = 0;
};

class PlatformError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 10 Gbps expressed in MB/s.
inline constexpr double network_link_limit = 1250.0;

inline void validate(const PlatformSpec& p) {
  auto positive = [&](double v, const std::string& field) {
    if (!(v > 0)) throw PlatformError("platform '" + p.name + "': " + field + " must be > 0");
  };
  if (p.channels.empty()) throw PlatformError("platform '" + p.name + "': no memory channels");
  for (std::size_t i = 0; i < p.channels.size(); ++i) {
    positive(p.channels[i].width, "memory_channels[" + std::to_string(i) + "].width");
    positive(p.channels[i].bandwidth, "memory_channels[" + std::to_string(i) + "].bandwidth");
  }
  positive(p.clock, "clock");
  positive(static_cast<double>(p.onchip_memory), "onchip_memory");
  positive(p.compute_slots, "compute_slots");
  positive(p.host_link.bandwidth, "host_link.bandwidth");
  positive(p.host_link.latency, "host_link.latency");
  positive(p.vf_count, "vf_count");
  if (p.kind == PlatformKind::network_attached && p.host_link.bandwidth > network_link_limit)
    throw PlatformError("platform '" + p.name + "': network-attached host_link.bandwidth exceeds 1250 MB/s");
}

inline json to_json(const PlatformSpec& p) {
  json channels = json::array();
  for (const auto& c : p.channels) channels.push_back({{"width", c.width}, {"bandwidth", c.bandwidth}});
  return {{"name", p.name},
          {"kind", to_string(p.kind)},
          {"memory_channels", channels},
          {"clock", p.clock},
          {"onchip_memory", p.onchip_memory},
          {"compute_slots", p.compute_slots},
          {"host_link", {{"bandwidth", p.host_link.bandwidth}, {"latency", p.host_link.latency}}},
          {"vf_count", p.vf_count}};
}

inline PlatformSpec platform_from_json(const json& j) {
  PlatformSpec p;
  try {
    p.name = j.value("name", std::string("platform"));
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "pcie-attached") {
      p.kind = PlatformKind::pcie_attached;
    } else if (kind == "network-attached") {
      p.kind = PlatformKind::network_attached;
    } else {
      throw PlatformError("platform '" + p.name + "': unknown kind '" + kind + "'");
    }
    for (const auto& c : j.at("memory_channels"))
      p.channels.push_back({c.at("width").get<int>(), c.at("bandwidth").get<double>()});
    p.clock = j.at("clock").get<double>();
    p.onchip_memory = j.at("onchip_memory").get<std::int64_t>();
    p.compute_slots = j.at("compute_slots").get<int>();
    p.host_link = {j.at("host_link").at("bandwidth").get<double>(), j.at("host_link").at("latency").get<double>()};
    p.vf_count = j.at("vf_count").get<int>();
  } catch (const json::exception& e) {
    throw PlatformError(std::string("malformed platform JSON: ") + e.what());
  }
  validate(p);
  return p;
}

}  // namespace basecamp::olympus
