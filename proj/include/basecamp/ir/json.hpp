#pragma once

#include <nlohmann/json.hpp>

#include "basecamp/ir/cost.hpp"
#include "basecamp/ir/evaluate.hpp"
#include "basecamp/ir/kernel_ir.hpp"

namespace basecamp::ir {

using json = nlohmann::ordered_json;

namespace detail {

inline const char* op_name(Op op) {
  switch (op) {
    case Op::constant: return "const";
    case Op::access: return "access";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::neg: return "neg";
    case Op::select: return "select";
    case Op::construct: return "construct";
  }
  return "?";
}

inline json node_json(const KernelIR& ir, const Statement& st, int id) {
  const Node& n = st.nodes[id];
  json j;
  j["op"] = op_name(n.op);
  switch (n.op) {
    case Op::constant:
      j["value"] = n.value;
      break;
    case Op::access: {
      j["tensor"] = ir.tensors[n.tensor].name;
      json subs = json::array();
      for (const auto& ix : n.subscripts) {
        json s;
        if (ix.kind == IndexExpr::Kind::index) {
          s["kind"] = "index";
          s["index"] = ir.indices[ix.index].name;
          s["offset"] = ix.offset;
        } else {
          s["kind"] = "gather";
          s["access"] = node_json(ir, st, ix.access);
        }
        subs.push_back(std::move(s));
      }
      j["subscripts"] = std::move(subs);
      break;
    }
    case Op::select:
      j["compare"] = ekl::spelling(n.compare);
      [[fallthrough]];
    default: {
      if (n.op == Op::construct) j["selector"] = ir.indices[n.selector].name;
      json args = json::array();
      for (int a : n.args) args.push_back(node_json(ir, st, a));
      j["args"] = std::move(args);
    }
  }
  return j;
}

inline json index_list(const KernelIR& ir, const std::vector<int>& ids) {
  json out = json::array();
  for (int id : ids) out.push_back({{"index", ir.indices[id].name}, {"extent", ir.indices[id].extent}});
  return out;
}

}  // namespace detail

/// Structured dump with a fixed key order: tensors, indices, statements.
inline json to_json(const KernelIR& ir) {
  json j;
  json tensors = json::array();
  for (const auto& t : ir.tensors) {
    tensors.push_back({{"name", t.name},
                       {"role", ekl::to_string(t.role)},
                       {"shape", t.shape},
                       {"format", to_string(t.format)}});
  }
  json indices = json::array();
  for (const auto& i : ir.indices) indices.push_back({{"name", i.name}, {"extent", i.extent}});
  json statements = json::array();
  for (const auto& st : ir.statements) {
    statements.push_back({{"output", ir.tensors[st.output].name},
                          {"free", detail::index_list(ir, st.free)},
                          {"reduce", detail::index_list(ir, st.reduce)},
                          {"expr", detail::node_json(ir, st, st.root)}});
  }
  j["tensors"] = std::move(tensors);
  j["indices"] = std::move(indices);
  j["statements"] = std::move(statements);
  return j;
}

inline json to_json(const CostReport& c) {
  json stmts = json::array();
  for (const auto& s : c.statements) {
    stmts.push_back({{"output", s.output},
                     {"macs", s.macs},
                     {"elements_read", s.elements_read},
                     {"elements_written", s.elements_written},
                     {"bytes_read", s.bytes_read},
                     {"bytes_written", s.bytes_written}});
  }
  return {{"macs", c.macs},
          {"elements_read", c.elements_read},
          {"elements_written", c.elements_written},
          {"bytes_read", c.bytes_read},
          {"bytes_written", c.bytes_written},
          {"statements", std::move(stmts)}};
}

inline json to_json(const DenseTensor& t) {
  return {{"shape", t.shape}, {"format", to_string(t.format)}, {"values", t.values}};
}

/// Accepts {"shape": [...], "values": [...], "format"?: "..."} or a flat
/// array of numbers (a vector).
inline DenseTensor tensor_from_json(const json& j) {
  if (j.is_array()) {
    std::vector<double> v = j.get<std::vector<double>>();
    auto n = static_cast<std::int64_t>(v.size());
    return DenseTensor::make({n}, std::move(v));
  }
  NumericFormat f = j.contains("format") ? parse_format(j.at("format").get<std::string>()) : NumericFormat{};
  return DenseTensor::make(j.at("shape").get<std::vector<std::int64_t>>(), j.at("values").get<std::vector<double>>(), f);
}

}  // namespace basecamp::ir
