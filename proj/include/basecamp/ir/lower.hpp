#pragma once

#include "basecamp/ekl/analyzer.hpp"
#include "basecamp/ir/kernel_ir.hpp"

namespace basecamp::ir {

namespace detail {

class Lowering {
 public:
  explicit Lowering(const ekl::TypedProgram& p) : prog_(p) {}

  KernelIR run() {
    for (const auto& s : prog_.symbols) {
      if (s.role == Role::index_domain) {
        ir_.indices.push_back({s.name, s.shape.front()});
      } else {
        ir_.tensors.push_back({s.name, s.shape, s.format, s.role});
      }
    }
    for (const auto& ts : prog_.statements) ir_.statements.push_back(lower(ts));
    return std::move(ir_);
  }

 private:
  Statement lower(const ekl::TypedStatement& ts) {
    Statement st;
    st.output = ir_.find_tensor(ts.target);
    for (const auto& f : ts.free_indices) st.free.push_back(ir_.find_index(f));
    for (const auto& r : ts.reduce_indices) st.reduce.push_back(ir_.find_index(r));
    if (ts.construct) {
      Node n;
      n.op = Op::construct;
      n.selector = st.free.back();
      for (const auto& e : ts.value.operands) n.args.push_back(emit(st, e));
      st.root = push(st, std::move(n));
    } else {
      st.root = emit(st, ts.value);
    }
    return st;
  }

  static int push(Statement& st, Node n) {
    st.nodes.push_back(std::move(n));
    return static_cast<int>(st.nodes.size()) - 1;
  }

  int emit(Statement& st, const ekl::Expr& e) {
    using K = ekl::Expr::Kind;
    Node n;
    switch (e.kind) {
      case K::number:
        n.op = Op::constant;
        n.value = e.number;
        break;
      case K::access:
        n.op = Op::access;
        n.tensor = ir_.find_tensor(e.name);
        for (const auto& sub : e.subscripts) {
          IndexExpr ix;
          if (sub.kind == K::index_ref) {
            ix.kind = IndexExpr::Kind::index;
            ix.index = ir_.find_index(sub.name);
            ix.offset = sub.offset;
          } else {
            ix.kind = IndexExpr::Kind::gather;
            ix.access = emit(st, sub);
          }
          n.subscripts.push_back(ix);
        }
        break;
      case K::binary:
        n.op = e.op == ekl::BinaryOp::add ? Op::add : e.op == ekl::BinaryOp::sub ? Op::sub : Op::mul;
        n.args = {emit(st, e.operands[0]), emit(st, e.operands[1])};
        break;
      case K::negate:
        n.op = Op::neg;
        n.args = {emit(st, e.operands[0])};
        break;
      case K::select:
        n.op = Op::select;
        n.compare = e.compare;
        for (const auto& o : e.operands) n.args.push_back(emit(st, o));
        break;
      case K::construct:
      case K::index_ref:
        throw std::logic_error("unexpected node in typed statement");
    }
    return push(st, std::move(n));
  }

  const ekl::TypedProgram& prog_;
  KernelIR ir_;
};

}  // namespace detail

/// One IR statement per source statement; tensor and index tables keep
/// declaration order.
inline KernelIR lower(const ekl::TypedProgram& p) { return detail::Lowering(p).run(); }

}  // namespace basecamp::ir
