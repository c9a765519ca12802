#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "basecamp/coord/dfg.hpp"
#include "basecamp/coord/execute.hpp"
#include "basecamp/coord/mapmatch.hpp"
#include "basecamp/coord/parser.hpp"
#include "support/coord_cases.hpp"

using namespace basecamp;
using namespace basecamp::coord;
using namespace basecamp::coord::testing;

namespace {

// Map matching without clones: gv, mapcell and cv are used more than once.
const char* kUncloned = R"(fn match_one(gv: GpsVector, mapcell: MapCell) -> RoadSpeedVector {
    #[kernel(offloaded = true, multiplicity = [1, 1, 1, 1],
        path = "projection.cpp")]
    let cv: CandiVector = projection(gv, mapcell);

    let t: Trellis = build_trellis(gv, cv, mapcell);
    let rsvbb: RoadSpeedVector = viterbi(t, cv);
    interpolate(rsvbb, mapcell)
})";

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(CoordParse, MapMatchingWithoutClones) {
  auto f = parse_coord(kUncloned);
  EXPECT_EQ(f.name.text, "match_one");
  EXPECT_EQ(f.call_count(), 4u);
  ASSERT_EQ(f.bindings.size(), 3u);
  ASSERT_TRUE(f.bindings[0].attribute.has_value());
  const auto& a = *f.bindings[0].attribute;
  EXPECT_TRUE(a.offloaded);
  EXPECT_EQ(a.multiplicity, (std::vector<std::int64_t>{1, 1, 1, 1}));
  EXPECT_EQ(a.path, "projection.cpp");
  EXPECT_EQ(f.bindings[0].call.callee.text, "projection");
  ASSERT_TRUE(f.result_call.has_value());
  EXPECT_EQ(f.result_call->callee.text, "interpolate");
}

TEST(CoordParse, ReuseWithoutClonesViolatesLinearity) {
  auto d = build_errors(kUncloned);
  std::set<std::string> twice;
  for (const auto& x : d)
    for (const char* name : {"gv", "mapcell", "cv", "t", "rsvbb"})
      if (x.code == "consumed-twice" && x.message.find("'" + std::string(name) + "'") != std::string::npos)
        twice.insert(name);
  EXPECT_EQ(twice, (std::set<std::string>{"gv", "mapcell", "cv"}));
}

TEST(CoordParse, IdentityFunction) {
  auto f = parse_coord("fn id(x: T) -> T { x }");
  EXPECT_EQ(f.call_count(), 0u);
  ASSERT_TRUE(f.result_name.has_value());
  EXPECT_EQ(f.result_name->text, "x");
  auto g = build_dfg(f);
  EXPECT_TRUE(g.nodes.empty());
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].from, (Endpoint{graph_input, 0}));
  EXPECT_EQ(g.edges[0].to, (Endpoint{graph_output, 0}));
  auto out = execute_dfg(g, {}, {{"T", 42}}, 1);
  EXPECT_EQ(out.value, 42);
}

TEST(CoordParse, AttributeErrors) {
  auto code_of = [](const char* src) {
    try {
      parse_coord(src);
    } catch (const CompileError& e) {
      return e.diagnostics().front().code;
    }
    return std::string("none");
  };
  EXPECT_EQ(code_of("fn f(x: T) -> T {\n#[kernel(offloaded = true, offloaded = false, path = \"a\")]\nlet y: T = k(x);\ny }"),
            "duplicate-attribute");
  EXPECT_EQ(code_of("fn f(x: T) -> T {\n#[kernel(speed = 3)]\nlet y: T = k(x);\ny }"), "unknown-attribute");
  EXPECT_EQ(code_of("fn f(x: T) -> T {\n#[kernel(offloaded = true)]\nlet y: T = k(x);\ny }"), "missing-path");
  try {
    parse_coord("fn f(x: T) -> T {\n  let y: T = k(x)\n  y\n}");
    FAIL();
  } catch (const CompileError& e) {
    const auto& d = e.diagnostics().front();
    EXPECT_EQ(d.span.line, 3);
    EXPECT_EQ(d.expected, (std::vector<std::string>{";"}));
  }
}

TEST(Dfg, DemoShape) {
  EXPECT_EQ(read_file(std::string(BASECAMP_SOURCE_DIR) + "/demos/mapmatch.cdr"), std::string(demo::mapmatch_source));
  auto g = build_dfg(parse_coord(demo::mapmatch_source));
  EXPECT_EQ(g.call_nodes(), 4u);
  int offloaded = 0;
  for (const auto& n : g.nodes) offloaded += n.kind == NodeKind::offloaded_kernel;
  EXPECT_EQ(offloaded, 1);
  EXPECT_TRUE(validate(g).empty());
  // Call-to-call dependencies once the clone nodes are looked through:
  // projection feeds build_trellis and viterbi, build_trellis feeds viterbi,
  // viterbi feeds interpolate.
  auto root = [&](Endpoint e) {
    while (e.node >= 0 && g.nodes[static_cast<std::size_t>(e.node)].is_clone()) e = g.inputs_of(e.node)[0]->from;
    return e;
  };
  std::set<std::pair<std::string, std::string>> deps;
  for (const auto& e : g.edges) {
    if (e.to.node < 0 || g.nodes[static_cast<std::size_t>(e.to.node)].is_clone()) continue;
    Endpoint from = root(e.from);
    if (from.node < 0) continue;
    deps.insert({g.nodes[static_cast<std::size_t>(from.node)].callee, g.nodes[static_cast<std::size_t>(e.to.node)].callee});
  }
  EXPECT_EQ(deps, (std::set<std::pair<std::string, std::string>>{{"projection", "build_trellis"},
                                                                 {"projection", "viterbi"},
                                                                 {"build_trellis", "viterbi"},
                                                                 {"viterbi", "interpolate"}}));
}

TEST(Dfg, LinearityDiagnostics) {
  auto d = build_errors("fn f(a: T) -> T {\n  let b: T = f(a);\n  let c: T = g(a);\n  c\n}");
  ASSERT_FALSE(d.empty());
  EXPECT_EQ(d[0].code, "consumed-twice");
  EXPECT_EQ(d[0].span.line, 3);
  ASSERT_TRUE(d[0].related.has_value());
  EXPECT_EQ(d[0].related->line, 2);
  bool b_unused = false;
  for (const auto& x : d) b_unused |= x.code == "never-consumed" && x.message.find("'b'") != std::string::npos;
  EXPECT_TRUE(b_unused);

  d = build_errors("fn f(a: T, z: T) -> T { g(a) }");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].code, "never-consumed");
  EXPECT_EQ(d[0].span.line, 1);

  d = build_errors("fn f(a: T) -> T { g(a, q) }");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].code, "unknown-name");
}

TEST(Dfg, NegativeProgramsProduceTheirDiagnostic) {
  auto cases = negative_linearity_cases();
  ASSERT_GE(cases.size(), 10u);
  for (const auto& c : cases) {
    auto d = build_errors(c.source);
    ASSERT_FALSE(d.empty()) << c.name;
    EXPECT_EQ(d[0].code, c.code) << c.name << ": " << d[0].message;
    EXPECT_EQ(d[0].span.line, c.line) << c.name;
  }
}

TEST(Dfg, RandomLinearProgramsBuild) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    std::string src = random_linear_program(seed);
    DataflowGraph g;
    ASSERT_NO_THROW(g = build_dfg(parse_coord(src))) << src;
    EXPECT_TRUE(validate(g).empty()) << src;
    Rng rng(seed);
    auto order = random_topological_order(g, rng);
    ASSERT_EQ(order.size(), g.nodes.size());
    std::vector<int> pos(g.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
    for (const auto& e : g.edges)
      if (e.from.node >= 0 && e.to.node >= 0) {
        EXPECT_LT(pos[static_cast<std::size_t>(e.from.node)], pos[static_cast<std::size_t>(e.to.node)]);
      }
  }
}

TEST(Dfg, JsonRoundTrip) {
  auto g = build_dfg(parse_coord(demo::mapmatch_source));
  auto j = to_json(g);
  EXPECT_EQ(to_json(dfg_from_json(j)).dump(), j.dump());
}

TEST(Execute, DemoIsScheduleIndependent) {
  auto g = build_dfg(parse_coord(demo::mapmatch_source));
  auto impls = demo::mapmatch_implementations();
  auto first = execute_dfg(g, impls, demo::mapmatch_inputs(), 1).value.dump();
  std::set<std::string> orders;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    auto order = random_topological_order(g, rng);
    std::string o;
    for (int n : order) o += std::to_string(n) + ",";
    orders.insert(o);
    EXPECT_EQ(execute_dfg(g, impls, demo::mapmatch_inputs(), seed).value.dump(), first);
  }
  // Only the three leading clones can be reordered: 3 linear extensions.
  EXPECT_EQ(orders.size(), 3u);
  // The matched trace follows the x-axis road then the vertical one.
  auto out = execute_dfg(g, impls, demo::mapmatch_inputs(), 7).value;
  EXPECT_EQ(out["segments"][0]["samples"], 4);
  EXPECT_EQ(out["segments"][1]["samples"], 4);
  EXPECT_EQ(out["segments"][2]["samples"], 0);
}

TEST(Execute, IdentityStubDiffersFromRegisteredProjection) {
  auto g = build_dfg(parse_coord(demo::mapmatch_source));
  auto real = execute_dfg(g, demo::mapmatch_implementations(true), demo::mapmatch_inputs(), 3).value.dump();
  auto stub = execute_dfg(g, demo::mapmatch_implementations(false), demo::mapmatch_inputs(), 3).value.dump();
  EXPECT_NE(real, stub);
  for (std::uint64_t seed = 4; seed < 20; ++seed) {
    EXPECT_EQ(execute_dfg(g, demo::mapmatch_implementations(true), demo::mapmatch_inputs(), seed).value.dump(), real);
    EXPECT_EQ(execute_dfg(g, demo::mapmatch_implementations(false), demo::mapmatch_inputs(), seed).value.dump(), stub);
  }
}

TEST(Execute, EklIdentityKernel) {
  auto g = build_dfg(parse_coord(
      "fn copy(x: Vec) -> Vec {\n#[kernel(offloaded = true, path = \"copy.ekl\")]\nlet y: Vec = copy(x);\ny\n}"));
  Implementations impls;
  impls.load_kernel = [](const std::string& path) {
    EXPECT_EQ(path, "copy.ekl");
    return std::string("index i : 4;\ntensor x : [4];\ny[i] = x[i]\n");
  };
  json in = {{"shape", {4}}, {"values", {1.5, -2, 3, 0.25}}};
  auto out = execute_dfg(g, impls, {{"Vec", in}}, 9);
  EXPECT_EQ(out.type, "Vec");
  EXPECT_EQ(out.value["values"], in["values"]);
  EXPECT_EQ(out.value["shape"], in["shape"]);
}

TEST(Execute, Errors) {
  auto g = build_dfg(parse_coord("fn f(x: A) -> B {\nlet y: B = conv(x);\ny\n}"));
  EXPECT_THROW(execute_dfg(g, {}, {{"A", 1}}, 1), ExecutionError);  // no implementation
  Implementations wrong;
  wrong.functions["conv"] = [](const DfgNode&, const std::vector<Payload>& a) { return Payload{"C", a[0].value}; };
  try {
    execute_dfg(g, wrong, {{"A", 1}}, 1);
    FAIL();
  } catch (const ExecutionError& e) {
    EXPECT_NE(std::string(e.what()).find("type mismatch"), std::string::npos);
  }
  EXPECT_THROW(execute_dfg(g, wrong, {{"B", 1}}, 1), ExecutionError);  // input tag
  Implementations right;
  right.functions["conv"] = [](const DfgNode&, const std::vector<Payload>& a) {
    return Payload{"B", a[0].value.get<int>() * 2};
  };
  EXPECT_EQ(execute_dfg(g, right, {{"A", 21}}, 1).value, 42);
}
