#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "basecamp/ir/cost.hpp"
#include "basecamp/numerics.hpp"
#include "basecamp/olympus/platform.hpp"

namespace basecamp::olympus {

/// Whole-kernel work and traffic, the planner's view of a cost report.
struct KernelCost {
  double macs = 0;
  double bytes_in = 0;
  double bytes_out = 0;
  NumericFormat format;
};

inline KernelCost kernel_cost(const ir::CostReport& c, const NumericFormat& f) {
  return {static_cast<double>(c.macs), c.bytes_read, c.bytes_written, f};
}

/// Reads the `{macs, bytes_in, bytes_out, format?}` cost metadata attached to
/// a DFG node.
inline KernelCost kernel_cost_from_json(const json& j) {
  KernelCost k;
  k.macs = j.at("macs").get<double>();
  k.bytes_in = j.at("bytes_in").get<double>();
  k.bytes_out = j.at("bytes_out").get<double>();
  if (j.contains("format")) k.format = parse_format(j.at("format").get<std::string>());
  if (k.macs < 0 || k.bytes_in < 0 || k.bytes_out < 0) throw std::invalid_argument("negative cost metadata");
  return k;
}

inline json to_json(const KernelCost& k) {
  return {{"macs", k.macs}, {"bytes_in", k.bytes_in}, {"bytes_out", k.bytes_out}, {"format", to_string(k.format)}};
}

struct KernelConfig {
  int node = -1;
  int replication = 1;
  int packing = 1;
  bool double_buffered = false;
  std::int64_t tile_elements = 1024;
  std::int64_t buffer_bytes = 0;
  std::optional<int> shared_with;

  bool operator==(const KernelConfig&) const = default;
};

/// Work for one tile.
struct TileWork {
  double macs = 0;
  double bytes_in = 0;
  double bytes_out = 0;
};

struct StageTimes {
  double read = 0;
  double execute = 0;
  double write = 0;

  double max() const { return std::max({read, execute, write}); }
  double sum() const { return read + execute + write; }
  bool operator==(const StageTimes&) const = default;
};

/// 1Ki, 2Ki, ... 1Mi elements.
inline std::vector<std::int64_t> default_tile_ladder() {
  std::vector<std::int64_t> out;
  for (std::int64_t t = 1024; t <= 1048576; t *= 2) out.push_back(t);
  return out;
}

inline std::int64_t input_elements(const KernelCost& k) {
  return static_cast<std::int64_t>(std::ceil(k.bytes_in * 8.0 / bit_width(k.format)));
}

inline std::int64_t tile_count(const KernelCost& k, std::int64_t tile_elements) {
  std::int64_t n = input_elements(k);
  return std::max<std::int64_t>(1, (n + tile_elements - 1) / tile_elements);
}

/// Traffic and work spread evenly over the tiles.
inline TileWork tile_work(const KernelCost& k, std::int64_t n_tiles) {
  double n = static_cast<double>(n_tiles);
  return {k.macs / n, k.bytes_in / n, k.bytes_out / n};
}

/// On-chip bytes for one tile's input and output buffers, twice over when
/// double buffered.
inline std::int64_t buffer_bytes(const TileWork& w, bool double_buffered) {
  auto b = static_cast<std::int64_t>(std::ceil(w.bytes_in) + std::ceil(w.bytes_out));
  return double_buffered ? 2 * b : b;
}

/// Channel serving a kernel; network-attached targets stream over the host
/// link but keep the channel's bus width for packing.
struct TransferChannel {
  int width = 0;
  double bandwidth = 0;
  double latency = 0;
};

inline TransferChannel transfer_channel(const PlatformSpec& p, std::size_t channel) {
  const MemoryChannel& c = p.channels.at(channel % p.channels.size());
  if (p.kind == PlatformKind::network_attached) return {c.width, p.host_link.bandwidth, p.host_link.latency};
  return {c.width, c.bandwidth, 0.0};
}

/// Per-tile stage times. Transfers move bytes at bandwidth × (P·w / W): only
/// P of the bus's lanes carry data. Execution retires one MAC per replica per
/// cycle.
inline StageTimes stage_times(const TileWork& w, const KernelConfig& cfg, const PlatformSpec& p,
                              const NumericFormat& f, std::size_t channel = 0) {
  TransferChannel ch = transfer_channel(p, channel);
  int lanes = packed_lane_count(ch.width, f);  // throws when the element is wider than the bus
  if (cfg.replication < 1 || cfg.packing < 1 || cfg.packing > lanes)
    throw std::invalid_argument("invalid config: R=" + std::to_string(cfg.replication) +
                                " P=" + std::to_string(cfg.packing) + " (lanes " + std::to_string(lanes) + ")");
  double efficiency = static_cast<double>(cfg.packing) * bit_width(f) / ch.width;
  double rate = ch.bandwidth * efficiency;
  StageTimes s;
  s.read = w.bytes_in / rate + ch.latency;
  s.execute = w.macs / (cfg.replication * p.clock);
  s.write = w.bytes_out / rate + ch.latency;
  return s;
}

/// Double buffered: the first tile fills the pipeline, then one tile leaves
/// per slowest stage. Otherwise tiles run back to back.
inline double pipeline_makespan(const StageTimes& s, std::int64_t n_tiles, bool double_buffered) {
  if (n_tiles < 1) throw std::invalid_argument("pipeline_makespan needs at least one tile");
  double n = static_cast<double>(n_tiles);
  if (double_buffered) return s.sum() + (n - 1) * s.max();
  return n * s.sum();
}

/// Time between successive invocations when invocations stream back to back.
inline double pipeline_period(const StageTimes& s, std::int64_t n_tiles, bool double_buffered) {
  return static_cast<double>(n_tiles) * (double_buffered ? s.max() : s.sum());
}

}  // namespace basecamp::olympus
