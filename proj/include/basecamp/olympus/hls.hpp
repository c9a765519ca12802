#pragma once

#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "basecamp/ir/kernel_ir.hpp"
#include "basecamp/numerics.hpp"
#include "basecamp/olympus/model.hpp"

namespace basecamp::olympus {

namespace detail {

inline const std::set<std::string>& c_keywords() {
  static const std::set<std::string> k = {
      "auto",   "break",  "case",    "char",   "const",    "continue", "default",  "do",     "double",
      "else",   "enum",   "extern",  "float",  "for",      "goto",     "if",       "inline", "int",
      "long",   "register", "restrict", "return", "short",  "signed",   "sizeof",   "static", "struct",
      "switch", "typedef", "union",  "unsigned", "void",   "volatile", "while",    "err",    "acc"};
  return k;
}

inline std::string c_name(const std::string& s) {
  if (c_keywords().count(s) || s.rfind("bc_", 0) == 0 || s.rfind("ix_", 0) == 0) return s + "_";
  return s;
}

inline std::string c_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return v < 0 ? "(" + s + ")" : s;
}

inline const char* compare_suffix(ekl::CompareOp op) {
  switch (op) {
    case ekl::CompareOp::le: return "le";
    case ekl::CompareOp::lt: return "lt";
    case ekl::CompareOp::ge: return "ge";
    case ekl::CompareOp::gt: return "gt";
    case ekl::CompareOp::eq: return "eq";
    case ekl::CompareOp::ne: return "ne";
  }
  return "le";
}

inline const char* compare_c(ekl::CompareOp op) {
  switch (op) {
    case ekl::CompareOp::le: return "<=";
    case ekl::CompareOp::lt: return "<";
    case ekl::CompareOp::ge: return ">=";
    case ekl::CompareOp::gt: return ">";
    case ekl::CompareOp::eq: return "==";
    case ekl::CompareOp::ne: return "!=";
  }
  return "<=";
}

class HlsEmitter {
 public:
  HlsEmitter(const ir::KernelIR& ir, const KernelConfig& cfg, std::string name)
      : ir_(ir), cfg_(cfg), name_(std::move(name)) {}

  std::string run() {
    std::ostringstream body;
    emit_body(body);

    std::ostringstream out;
    out << "/* HLS-style C for kernel '" << name_ << "'. */\n";
    out << "/* config: replication=" << cfg_.replication << " packing=" << cfg_.packing
        << " double_buffered=" << (cfg_.double_buffered ? 1 : 0) << " tile_elements=" << cfg_.tile_elements
        << " */\n";
    out << "#include <math.h>\n\n";
    emit_helpers(out);
    out << "/* Returns 0, or 1 when a gather index is non-integral or out of range. */\n";
    out << "int " << c_name(name_) << "(";
    bool first = true;
    for (const auto& t : ir_.tensors) {
      if (t.role == ir::Role::intermediate) continue;
      out << (first ? "" : ", ") << (t.role == ir::Role::input ? "const double *" : "double *") << c_name(t.name);
      first = false;
    }
    if (first) out << "void";
    out << ") {\n";
    out << body.str();
    out << "}\n";
    return out.str();
  }

 private:
  const ir::KernelIR& ir_;
  const KernelConfig& cfg_;
  std::string name_;
  bool use_fixed_ = false, use_float_ = false, use_index_ = false;
  std::set<ekl::CompareOp> selects_;

  std::string quantizer(const std::string& value, const NumericFormat& f) {
    if (f.kind == FormatKind::ieee_double) return value;
    if (f.kind == FormatKind::fixed) {
      use_fixed_ = true;
      return "bc_q_fixed(" + value + ", " + std::to_string(f.frac_bits) + ", " + c_double(lowest_value(f)) + ", " +
             c_double(max_value(f)) + ")";
    }
    use_float_ = true;
    int bias = (1 << (f.exp_bits - 1)) - 1;
    return "bc_q_float(" + value + ", " + std::to_string(f.mantissa_bits) + ", " + std::to_string(1 - bias) + ", " +
           c_double(max_value(f)) + ")";
  }

  std::string loop_var(int index) const { return "ix_" + ir_.indices[static_cast<std::size_t>(index)].name; }

  std::string expr(const ir::Statement& st, int id) {
    const ir::Node& n = st.nodes[static_cast<std::size_t>(id)];
    switch (n.op) {
      case ir::Op::constant: return c_double(n.value);
      case ir::Op::access: {
        const ir::TensorInfo& t = ir_.tensors[static_cast<std::size_t>(n.tensor)];
        std::string flat;
        for (std::size_t d = 0; d < n.subscripts.size(); ++d) {
          const ir::IndexExpr& ix = n.subscripts[d];
          std::string pos;
          if (ix.kind == ir::IndexExpr::Kind::index) {
            pos = loop_var(ix.index);
            if (ix.offset != 0) pos = "(" + pos + " + " + std::to_string(ix.offset) + ")";
          } else {
            use_index_ = true;
            pos = "bc_index(" + expr(st, ix.access) + ", " + std::to_string(t.shape[d]) + ", &err)";
          }
          flat = d == 0 ? pos : "(" + flat + ") * " + std::to_string(t.shape[d]) + " + " + pos;
        }
        return c_name(t.name) + "[" + (flat.empty() ? "0" : flat) + "]";
      }
      case ir::Op::add: return "(" + expr(st, n.args[0]) + " + " + expr(st, n.args[1]) + ")";
      case ir::Op::sub: return "(" + expr(st, n.args[0]) + " - " + expr(st, n.args[1]) + ")";
      case ir::Op::mul: return "(" + expr(st, n.args[0]) + " * " + expr(st, n.args[1]) + ")";
      case ir::Op::neg: return "(-" + expr(st, n.args[0]) + ")";
      case ir::Op::select: {
        // A call evaluates all four operands, as the interpreter does.
        selects_.insert(n.compare);
        return std::string("bc_select_") + compare_suffix(n.compare) + "(" + expr(st, n.args[0]) + ", " +
               expr(st, n.args[1]) + ", " + expr(st, n.args[2]) + ", " + expr(st, n.args[3]) + ")";
      }
      case ir::Op::construct: {
        std::string sel = loop_var(n.selector);
        std::string s = expr(st, n.args.back());
        for (std::size_t k = n.args.size() - 1; k-- > 0;)
          s = "(" + sel + " == " + std::to_string(k) + " ? " + expr(st, n.args[k]) + " : " + s + ")";
        return s;
      }
    }
    return "0.0";
  }

  void emit_body(std::ostringstream& out) {
    out << "  int err = 0;\n";
    for (const auto& t : ir_.tensors)
      if (t.role == ir::Role::intermediate)
        out << "  static double " << c_name(t.name) << "[" << t.size() << "];\n";
    for (std::size_t s = 0; s < ir_.statements.size(); ++s) {
      const ir::Statement& st = ir_.statements[s];
      const ir::TensorInfo& target = ir_.tensors[static_cast<std::size_t>(st.output)];
      out << "\n  /* " << target.name << ": free [";
      for (std::size_t i = 0; i < st.free.size(); ++i) out << (i ? ", " : "") << ir_.indices[static_cast<std::size_t>(st.free[i])].name;
      out << "], reduce [";
      for (std::size_t i = 0; i < st.reduce.size(); ++i) out << (i ? ", " : "") << ir_.indices[static_cast<std::size_t>(st.reduce[i])].name;
      out << "] */\n";
      out << "  {\n";
      std::string indent = "    ";
      std::string flat;
      for (std::size_t i = 0; i < st.free.size(); ++i) {
        const auto& idx = ir_.indices[static_cast<std::size_t>(st.free[i])];
        if (i == 0) out << indent << "/* pragma: unroll factor=" << cfg_.replication << " */\n";
        out << indent << "for (long " << loop_var(st.free[i]) << " = 0; " << loop_var(st.free[i]) << " < "
            << idx.extent << "; ++" << loop_var(st.free[i]) << ") {\n";
        indent += "  ";
        flat = i == 0 ? loop_var(st.free[i])
                      : "(" + flat + ") * " + std::to_string(idx.extent) + " + " + loop_var(st.free[i]);
      }
      std::string target_ref = c_name(target.name) + "[" + (flat.empty() ? "0" : flat) + "]";
      if (st.reduce.empty()) {
        // `0.0 +` mirrors the interpreter's accumulator start (it turns -0 into +0).
        out << indent << target_ref << " = " << quantizer("(0.0 + " + expr(st, st.root) + ")", target.format)
            << ";\n";
      } else {
        emit_reduction(out, st, indent, target_ref, target.format);
      }
      for (std::size_t i = 0; i < st.free.size(); ++i) {
        indent.resize(indent.size() - 2);
        out << indent << "}\n";
      }
      out << "  }\n";
    }
    out << "  return err;\n";
  }

  void emit_reduction(std::ostringstream& out, const ir::Statement& st, std::string indent,
                      const std::string& target_ref, const NumericFormat& format) {
    out << indent << "double acc = 0.0;\n";
    std::string acc_indent = indent;
    for (std::size_t i = 0; i < st.reduce.size(); ++i) {
      const auto& idx = ir_.indices[static_cast<std::size_t>(st.reduce[i])];
      if (i + 1 == st.reduce.size()) out << indent << "/* pragma: pipeline II=1 */\n";
      out << indent << "for (long " << loop_var(st.reduce[i]) << " = 0; " << loop_var(st.reduce[i]) << " < "
          << idx.extent << "; ++" << loop_var(st.reduce[i]) << ") {\n";
      indent += "  ";
    }
    out << indent << "acc = acc + " << expr(st, st.root) << ";\n";
    for (std::size_t i = 0; i < st.reduce.size(); ++i) {
      indent.resize(indent.size() - 2);
      out << indent << "}\n";
    }
    out << acc_indent << target_ref << " = " << quantizer("acc", format) << ";\n";
  }

  void emit_helpers(std::ostringstream& out) const {
    if (use_fixed_)
      out << "/* Round to a multiple of 2^-frac, ties to even, saturating to [lo, hi]. */\n"
             "static double bc_q_fixed(double x, int frac, double lo, double hi) {\n"
             "  double s;\n"
             "  if (isnan(x)) return x;\n"
             "  if (isinf(x)) return x > 0 ? hi : lo;\n"
             "  s = ldexp(x, frac);\n"
             "  if (s >= 9.0e18) return hi;\n"
             "  if (s <= -9.0e18) return lo;\n"
             "  s = ldexp((double)llrint(s), -frac);\n"
             "  return s < lo ? lo : (s > hi ? hi : s);\n"
             "}\n\n";
    if (use_float_)
      out << "/* Round to a minifloat with `mant` mantissa bits, ties to even, saturating. */\n"
             "static double bc_q_float(double x, int mant, int emin, double hi) {\n"
             "  double a, r;\n"
             "  int e2, e;\n"
             "  if (isnan(x)) return x;\n"
             "  a = fabs(x);\n"
             "  if (a == 0.0) return x;\n"
             "  if (isinf(a)) return copysign(hi, x);\n"
             "  frexp(a, &e2);\n"
             "  e = e2 - 1 < emin ? emin : e2 - 1;\n"
             "  r = ldexp(nearbyint(ldexp(a, mant - e)), e - mant);\n"
             "  if (r > hi) r = hi;\n"
             "  return copysign(r, x);\n"
             "}\n\n";
    if (use_index_)
      out << "static long bc_index(double v, long extent, int *err) {\n"
             "  if (v != floor(v) || v < 0.0 || v >= (double)extent) {\n"
             "    *err = 1;\n"
             "    return 0;\n"
             "  }\n"
             "  return (long)v;\n"
             "}\n\n";
    for (auto op : selects_)
      out << "static double bc_select_" << compare_suffix(op) << "(double a, double b, double t, double f) {\n"
          << "  return a " << compare_c(op) << " b ? t : f;\n"
          << "}\n\n";
  }
};

}  // namespace detail

/// C99 text for a kernel: one function, a loop nest per statement (free
/// indices outside, reduce indices inside), quantize-on-store through helper
/// functions, and comments recording the hardware configuration. Inputs are
/// expected to be representable in their declared formats already.
inline std::string emit_hls_c(const ir::KernelIR& ir, const KernelConfig& cfg, const std::string& name = "kernel") {
  return detail::HlsEmitter(ir, cfg, name).run();
}

}  // namespace basecamp::olympus
