#pragma once

#include <string_view>

#include "basecamp/ekl/analyzer.hpp"
#include "basecamp/ekl/parser.hpp"
#include "basecamp/ir/lower.hpp"

namespace basecamp::ir {

struct CompiledKernel {
  ekl::KernelSource source;
  ekl::TypedProgram program;
  KernelIR ir;
};

/// parse -> analyze -> lower. Throws CompileError on the first failing stage.
inline CompiledKernel compile_kernel(std::string_view text, NumericFormat default_format = {}) {
  CompiledKernel k;
  k.source = ekl::parse_kernel(text);
  k.program = ekl::analyze(k.source, default_format);
  k.ir = lower(k.program);
  return k;
}

}  // namespace basecamp::ir
