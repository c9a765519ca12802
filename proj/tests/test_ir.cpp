#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "basecamp/demo.hpp"
#include "basecamp/ir/compile.hpp"
#include "basecamp/ir/cost.hpp"
#include "basecamp/ir/evaluate.hpp"
#include "basecamp/ir/json.hpp"
#include "basecamp/random.hpp"
#include "support/ast_oracle.hpp"
#include "support/ekl_checks.hpp"
#include "support/kernel_gen.hpp"

using namespace basecamp;
using ir::DenseTensor;
using ir::TensorMap;

namespace {

const char* kMatvec = "index i : 2;\nindex j : 2;\ntensor A : [2, 2];\ntensor B : [2];\ny[i] = A[i,j]*B[j]\n";

TensorMap matvec_inputs() {
  TensorMap in;
  in["A"] = DenseTensor::make({2, 2}, {1, 2, 3, 4});
  in["B"] = DenseTensor::make({2}, {5, 6});
  return in;
}

}  // namespace

TEST(Lower, DemoFixtureShape) {
  auto k = ir::compile_kernel(demo::major_absorber_source);
  ASSERT_EQ(k.ir.statements.size(), 6u);
  const auto& last = k.ir.statements.back();
  EXPECT_EQ(k.ir.tensors[last.output].name, "tau_abs");
  auto names = [&](const std::vector<int>& ids) {
    std::vector<std::string> out;
    for (int id : ids) out.push_back(k.ir.indices[id].name);
    return out;
  };
  EXPECT_EQ(names(last.free), (std::vector<std::string>{"x", "g"}));
  EXPECT_EQ(names(last.reduce), (std::vector<std::string>{"t", "p", "e"}));
  // The three constructions are materialised as integer tensors.
  for (const char* t : {"i_T", "i_eta", "i_p"}) {
    const auto& info = k.ir.tensors[k.ir.find_tensor(t)];
    EXPECT_EQ(info.format, NumericFormat::integer()) << t;
    EXPECT_EQ(info.role, ekl::Role::intermediate) << t;
  }
}

TEST(Lower, IdentityStatement) {
  auto k = ir::compile_kernel("index i : 3;\ntensor x : [3];\ny[i] = x[i]\n");
  ASSERT_EQ(k.ir.statements.size(), 1u);
  const auto& st = k.ir.statements[0];
  EXPECT_TRUE(st.reduce.empty());
  EXPECT_EQ(st.nodes[st.root].op, ir::Op::access);
}

TEST(Evaluate, Matvec) {
  auto k = ir::compile_kernel(kMatvec);
  auto out = ir::evaluate(k.ir, matvec_inputs());
  EXPECT_EQ(out.at("y").values, (std::vector<double>{17, 39}));
}

TEST(Evaluate, Relu) {
  auto k = ir::compile_kernel("index i : 2;\ntensor x : [2];\ny[i] = select(x[i] <= 0, 0, x[i])\n");
  TensorMap in;
  in["x"] = DenseTensor::make({2}, {-1, 2});
  EXPECT_EQ(ir::evaluate(k.ir, in).at("y").values, (std::vector<double>{0, 2}));
}

TEST(Evaluate, Gather) {
  auto k = ir::compile_kernel("index i : 2;\ntensor idx : [2] of int;\ntensor v : [2];\ny[i] = v[idx[i]]\n");
  TensorMap in;
  in["idx"] = DenseTensor::make({2}, {1, 0}, NumericFormat::integer());
  in["v"] = DenseTensor::make({2}, {10, 20});
  EXPECT_EQ(ir::evaluate(k.ir, in).at("y").values, (std::vector<double>{20, 10}));
}

TEST(Evaluate, GatherOutOfRangeNamesTheSite) {
  auto k = ir::compile_kernel("index i : 2;\ntensor idx : [2] of int;\ntensor v : [2];\ny[i] = v[idx[i]]\n");
  TensorMap in;
  in["idx"] = DenseTensor::make({2}, {0, 5}, NumericFormat::integer());
  in["v"] = DenseTensor::make({2}, {10, 20});
  try {
    ir::evaluate(k.ir, in);
    FAIL();
  } catch (const ir::EvaluationError& e) {
    std::string m = e.what();
    EXPECT_NE(m.find("statement 0"), std::string::npos) << m;
    EXPECT_NE(m.find("'v'"), std::string::npos) << m;
    EXPECT_NE(m.find("output position 1"), std::string::npos) << m;
    EXPECT_NE(m.find("5"), std::string::npos) << m;
  }
}

TEST(Evaluate, MissingOrMisshapenInput) {
  auto k = ir::compile_kernel(kMatvec);
  TensorMap in = matvec_inputs();
  in.erase("B");
  EXPECT_THROW(ir::evaluate(k.ir, in), ir::EvaluationError);
  in = matvec_inputs();
  in["B"] = DenseTensor::make({3}, {1, 2, 3});
  EXPECT_THROW(ir::evaluate(k.ir, in), ir::EvaluationError);
}

TEST(Evaluate, ConstructionSelectsElement) {
  auto k = ir::compile_kernel("index x : 3;\nindex t : 2;\ntensor j : [3] of int;\nv[x, t] = [j[x], j[x]+1]\n");
  TensorMap in;
  in["j"] = DenseTensor::make({3}, {4, 0, 7}, NumericFormat::integer());
  EXPECT_EQ(ir::evaluate(k.ir, in).at("v").values, (std::vector<double>{4, 5, 0, 1, 7, 8}));
}

TEST(Evaluate, EachOpModeRoundsIntermediates) {
  // 0.7 rounds to 179/256. Rounding after each multiply gives 87/256, one
  // rounding of the exact cube gives 88/256.
  auto k = ir::compile_kernel("index i : 1;\ntensor a : [1];\ny[i] = a[i]*a[i]*a[i]\n", parse_format("fixed:8:8"));
  TensorMap in;
  in["a"] = DenseTensor::make({1}, {0.7});
  double store = ir::evaluate(k.ir, in).at("y").values[0];
  double each = ir::evaluate(k.ir, in, ir::EvalMode::quantize_each_op).at("y").values[0];
  double q = 179.0 / 256.0;
  EXPECT_EQ(store, quantize(q * q * q, parse_format("fixed:8:8")));
  EXPECT_EQ(each, quantize(quantize(q * q, parse_format("fixed:8:8")) * q, parse_format("fixed:8:8")));
  EXPECT_EQ(store, 88.0 / 256.0);
  EXPECT_EQ(each, 87.0 / 256.0);
}

TEST(Evaluate, DemoMatchesOracleBitwise) {
  auto k = ir::compile_kernel(demo::major_absorber_source);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    auto in = demo::major_absorber_inputs(rng);
    auto got = ir::evaluate_all(k.ir, in);
    auto want = oracle::run(k.program, in).tensors;
    for (const auto& [name, t] : got) ASSERT_EQ(t.values, want.at(name).values) << name;
  }
}

TEST(Evaluate, DemoQuantizedWithinHalfSpacing) {
  for (const char* spec : {"fixed:8:8", "float:5:2"}) EXPECT_EQ(basecamp::testing::check_demo_quantized(spec, 20), "");
}

TEST(FormatTable, DecodesEveryPattern) {
  auto fixed = basecamp::testing::representable_values(parse_format("fixed:8:8"));
  EXPECT_EQ(fixed.size(), 65536u);
  EXPECT_EQ(fixed.front(), -128.0);
  EXPECT_EQ(fixed.back(), max_value(parse_format("fixed:8:8")));
  auto mini = basecamp::testing::representable_values(parse_format("float:5:2"));
  EXPECT_EQ(mini.size(), 2u * 31 * 4 - 1);  // +0 and -0 collapse
  EXPECT_EQ(mini.back(), 57344.0);
  EXPECT_EQ(mini[mini.size() / 2 + 1], std::ldexp(1.0, -16));  // smallest subnormal
  for (double x : mini) EXPECT_EQ(quantize(x, parse_format("float:5:2")), x);
}

TEST(Evaluate, FuzzedKernelsMatchOracle) {
  int with_gather = 0, with_construct = 0, with_select = 0, with_reduce = 0;
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    auto gk = gen::KernelGenerator(seed).generate();
    auto k = ir::compile_kernel(gk.source);
    auto got = ir::evaluate_all(k.ir, gk.inputs);
    auto want = oracle::run(k.program, gk.inputs);
    for (const auto& [name, t] : got) ASSERT_EQ(t.values, want.tensors.at(name).values) << gk.source;
    with_gather += gk.source.find("tab") != std::string::npos;
    with_construct += gk.source.find("= [") != std::string::npos;
    with_select += gk.source.find("select") != std::string::npos;
    bool reduces = false;
    for (const auto& st : k.ir.statements) reduces |= !st.reduce.empty();
    with_reduce += reduces;
    EXPECT_EQ(ir::cost(k.ir, NumericFormat{}).macs, want.multiplies) << gk.source;
  }
  EXPECT_GT(with_gather, 20);
  EXPECT_GT(with_construct, 20);
  EXPECT_GT(with_select, 20);
  EXPECT_GT(with_reduce, 20);
}

TEST(Evaluate, ReductionLinearity) {
  // Evaluating the contraction over each half of j's domain and adding the
  // two partial results reproduces the full contraction.
  auto kernel = [](std::int64_t n, std::int64_t m) {
    std::string ns = std::to_string(n), ms = std::to_string(m);
    return ir::compile_kernel("index i : " + ns + ";\nindex j : " + ms + ";\ntensor A : [" + ns + ", " + ms +
                              "];\ntensor B : [" + ms + "];\ny[i] = A[i,j]*B[j] - select(B[j] < 0, A[i,j], 1.5)\n");
  };
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    std::int64_t n = rng.between(1, 5), half = rng.between(1, 4), m = 2 * half;
    std::vector<double> a(static_cast<std::size_t>(n * m)), b(static_cast<std::size_t>(m));
    for (auto& v : a) v = rng.uniform(-3, 3);
    for (auto& v : b) v = rng.uniform(-3, 3);
    auto slice = [&](std::int64_t from) {
      TensorMap in;
      std::vector<double> as, bs(b.begin() + from, b.begin() + from + half);
      for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = from; j < from + half; ++j) as.push_back(a[static_cast<std::size_t>(i * m + j)]);
      in["A"] = DenseTensor::make({n, half}, as);
      in["B"] = DenseTensor::make({half}, bs);
      return in;
    };
    TensorMap in;
    in["A"] = DenseTensor::make({n, m}, a);
    in["B"] = DenseTensor::make({m}, b);
    auto y = ir::evaluate(kernel(n, m).ir, in).at("y").values;
    auto lo = ir::evaluate(kernel(n, half).ir, slice(0)).at("y").values;
    auto hi = ir::evaluate(kernel(n, half).ir, slice(half)).at("y").values;
    for (std::size_t i = 0; i < y.size(); ++i)
      EXPECT_LE(std::fabs(lo[i] + hi[i] - y[i]), 1e-12 * std::max(1.0, std::fabs(y[i])));
  }
}

TEST(Evaluate, QuantizationSandwich) {
  // Every stored element equals the format rounding of the f64 value computed
  // from the (already rounded) operands of that statement.
  for (const char* spec : {"fixed:8:8", "float:5:2", "float:4:3", "ufixed:6:4"}) {
    auto fmt = parse_format(spec);
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      auto gk = gen::KernelGenerator(seed).generate();
      auto k = ir::compile_kernel(gk.source, fmt);
      auto all = ir::evaluate_all(k.ir, gk.inputs);
      for (std::size_t s = 0; s < k.program.statements.size(); ++s) {
        TensorMap env = all;
        oracle::run_statement(k.program, env, s, false);
        const auto& name = k.program.statements[s].target;
        const auto& stored = all.at(name);
        for (std::size_t i = 0; i < stored.values.size(); ++i)
          ASSERT_EQ(stored.values[i], quantize(env.at(name).values[i], stored.format)) << spec << '\n' << gk.source;
      }
    }
  }
}

TEST(Cost, Examples) {
  auto mv = ir::cost(ir::compile_kernel(kMatvec).ir, NumericFormat{});
  EXPECT_EQ(mv.macs, 4);
  EXPECT_EQ(mv.elements_read, 6);
  EXPECT_EQ(mv.elements_written, 2);
  EXPECT_EQ(mv.bytes_read, 48.0);

  auto id = ir::cost(ir::compile_kernel("index i : 8;\ntensor x : [8];\ny[i] = x[i]\n").ir, parse_format("fixed:8:8"));
  EXPECT_EQ(id.macs, 0);
  EXPECT_EQ(id.elements_read, 8);
  EXPECT_EQ(id.elements_written, 8);
  EXPECT_EQ(id.bytes_written, 16.0);

  auto demo_cost = ir::cost(ir::compile_kernel(demo::major_absorber_source).ir, NumericFormat{});
  EXPECT_EQ(demo_cost.statements.back().output, "tau_abs");
  EXPECT_EQ(demo_cost.statements.back().macs, 16 * 16 * (2 * 2 * 2) * 2);
  std::int64_t total = 0;
  for (const auto& s : demo_cost.statements) total += s.macs;
  EXPECT_EQ(total, demo_cost.macs);
}

TEST(Cost, DemoMatchesInstrumentedOracle) {
  auto k = ir::compile_kernel(demo::major_absorber_source);
  Rng rng(3);
  auto r = oracle::run(k.program, demo::major_absorber_inputs(rng));
  EXPECT_EQ(ir::cost(k.ir, NumericFormat{}).macs, r.multiplies);
}

TEST(Json, IrDumpIsStable) {
  auto k = ir::compile_kernel(demo::major_absorber_source);
  auto a = ir::to_json(k.ir).dump(2);
  auto b = ir::to_json(ir::compile_kernel(demo::major_absorber_source).ir).dump(2);
  EXPECT_EQ(a, b);
  auto j = ir::to_json(k.ir);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"tensors", "indices", "statements"}));
  EXPECT_EQ(j["statements"][5]["reduce"].size(), 3u);
}

TEST(Json, TensorRoundTrip) {
  DenseTensor t = DenseTensor::make({2, 2}, {1, 2, 3, 4}, parse_format("fixed:8:8"));
  EXPECT_EQ(ir::tensor_from_json(ir::to_json(t)), t);
  EXPECT_EQ(ir::tensor_from_json(ir::json::parse("[1, 2, 3]")).shape, (std::vector<std::int64_t>{3}));
}
