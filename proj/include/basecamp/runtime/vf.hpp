#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "basecamp/runtime/cluster.hpp"

namespace basecamp::runtime {

class VFExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotAttached : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Virtual functions of one physical device. A VF belongs to at most one VM;
/// a VM may hold several.
class VfPool {
 public:
  VfPool() = default;
  explicit VfPool(int count) : owner_(static_cast<std::size_t>(count)) {}

  /// Binds the lowest free VF to `vm` and returns its index.
  int attach(const std::string& vm) {
    for (std::size_t i = 0; i < owner_.size(); ++i)
      if (!owner_[i]) {
        owner_[i] = vm;
        return static_cast<int>(i);
      }
    throw VFExhausted("no free VF for '" + vm + "'");
  }

  /// Releases the lowest VF held by `vm` and returns its index.
  int detach(const std::string& vm) {
    for (std::size_t i = 0; i < owner_.size(); ++i)
      if (owner_[i] == vm) {
        owner_[i].reset();
        return static_cast<int>(i);
      }
    throw NotAttached("'" + vm + "' holds no VF");
  }

  /// Releases a specific VF, which must belong to `vm`.
  void detach(const std::string& vm, int vf) {
    if (vf < 0 || static_cast<std::size_t>(vf) >= owner_.size() || owner_[static_cast<std::size_t>(vf)] != vm)
      throw NotAttached("VF " + std::to_string(vf) + " is not attached to '" + vm + "'");
    owner_[static_cast<std::size_t>(vf)].reset();
  }

  int size() const { return static_cast<int>(owner_.size()); }
  int free_count() const {
    int n = 0;
    for (const auto& o : owner_) n += !o;
    return n;
  }
  int held_by(const std::string& vm) const {
    int n = 0;
    for (const auto& o : owner_) n += o == vm;
    return n;
  }
  const std::optional<std::string>& owner(int vf) const { return owner_.at(static_cast<std::size_t>(vf)); }

 private:
  std::vector<std::optional<std::string>> owner_;
};

/// VF pools of every fpga node, keyed by node id.
struct VfRegistry {
  std::map<std::string, VfPool> pools;

  VfRegistry() = default;
  explicit VfRegistry(const ClusterSpec& c) {
    for (const auto& n : c.nodes)
      if (n.kind == NodeKind::fpga) pools.emplace(n.id, VfPool(n.vf_count));
  }

  VfPool& at(const std::string& node) {
    auto it = pools.find(node);
    if (it == pools.end()) throw std::out_of_range("'" + node + "' is not an fpga node");
    return it->second;
  }
};

inline int vf_attach(VfRegistry& r, const std::string& node, const std::string& vm) { return r.at(node).attach(vm); }
inline int vf_detach(VfRegistry& r, const std::string& node, const std::string& vm) { return r.at(node).detach(vm); }

}  // namespace basecamp::runtime
