#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "basecamp/demo.hpp"
#include "basecamp/ekl/analyzer.hpp"
#include "basecamp/ekl/parser.hpp"
#include "basecamp/ekl/printer.hpp"
#include "basecamp/random.hpp"
#include "support/ast_oracle.hpp"
#include "support/kernel_gen.hpp"

using namespace basecamp;
using namespace basecamp::ekl;

namespace {

const Statement& statement_at(const KernelSource& k, std::size_t n) {
  std::size_t seen = 0;
  for (const auto& item : k.items)
    if (auto* s = std::get_if<Statement>(&item); s && seen++ == n) return *s;
  throw std::out_of_range("no such statement");
}

std::vector<Diagnostic> diagnostics_of(const std::string& src) {
  try {
    analyze(parse_kernel(src));
  } catch (const CompileError& e) {
    return e.diagnostics();
  }
  return {};
}

bool round_trips(const KernelSource& k) {
  return structurally_equal(parse_kernel(pretty_print(k)), k);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Random expression trees built directly as ASTs, so the printer sees shapes
// the text generator would never write (nested negation, left-leaning
// subtraction chains, selects inside products).
class AstGen {
 public:
  explicit AstGen(std::uint64_t seed) : rng_(seed) {}

  Expr expr(int depth) {
    Expr e;
    if (depth == 0 || rng_.bernoulli(0.25)) {
      if (rng_.bernoulli(0.3)) {
        e.kind = Expr::Kind::number;
        e.integer_literal = rng_.bernoulli(0.5);
        e.number = e.integer_literal ? static_cast<double>(rng_.between(0, 99)) : rng_.uniform(0.0, 10.0);
        return e;
      }
      e.kind = Expr::Kind::access;
      e.name = rng_.bernoulli(0.5) ? "a" : "b";
      int rank = static_cast<int>(rng_.between(0, 2));
      for (int d = 0; d < rank; ++d) e.subscripts.push_back(subscript());
      return e;
    }
    switch (rng_.below(4)) {
      case 0:
      case 1: {
        e.kind = Expr::Kind::binary;
        e.op = static_cast<BinaryOp>(rng_.below(3));
        e.operands = {expr(depth - 1), expr(depth - 1)};
        return e;
      }
      case 2:
        e.kind = Expr::Kind::negate;
        e.operands = {expr(depth - 1)};
        return e;
      default:
        e.kind = Expr::Kind::select;
        e.compare = static_cast<CompareOp>(rng_.below(6));
        e.operands = {expr(depth - 1), expr(depth - 1), expr(depth - 1), expr(depth - 1)};
        return e;
    }
  }

  KernelSource program() {
    KernelSource k;
    int n = static_cast<int>(rng_.between(1, 4));
    for (int s = 0; s < n; ++s) {
      Statement st;
      st.target.text = "y" + std::to_string(s);
      if (rng_.bernoulli(0.6)) st.indices = std::vector<Identifier>{{"i", {}}, {"j", {}}};
      if (rng_.bernoulli(0.15)) {
        st.value.kind = Expr::Kind::construct;
        int len = static_cast<int>(rng_.between(1, 3));
        for (int q = 0; q < len; ++q) st.value.operands.push_back(expr(2));
      } else {
        st.value = expr(4);
      }
      k.items.push_back(std::move(st));
    }
    return k;
  }

 private:
  Expr subscript() {
    Expr s;
    s.kind = Expr::Kind::access;
    s.name = rng_.bernoulli(0.5) ? "i" : "j";
    if (rng_.bernoulli(0.3)) {
      Expr lit;
      lit.kind = Expr::Kind::number;
      lit.integer_literal = true;
      lit.number = static_cast<double>(rng_.between(1, 3));
      Expr sum;
      sum.kind = Expr::Kind::binary;
      sum.op = rng_.bernoulli(0.5) ? BinaryOp::add : BinaryOp::sub;
      sum.operands = {s, lit};
      return sum;
    }
    if (rng_.bernoulli(0.2)) {
      Expr g;
      g.kind = Expr::Kind::access;
      g.name = "tab";
      g.subscripts = {s};
      return g;
    }
    return s;
  }

  Rng rng_;
};

}  // namespace

TEST(Parse, SelectWithComparison) {
  auto k = parse_kernel("i_strato = select(p[x] <= strato, 1, 0)");
  const auto& st = statement_at(k, 0);
  EXPECT_EQ(st.target.text, "i_strato");
  EXPECT_FALSE(st.indices.has_value());
  ASSERT_EQ(st.value.kind, Expr::Kind::select);
  EXPECT_EQ(st.value.compare, CompareOp::le);
  EXPECT_EQ(st.value.operands[0].name, "p");
  EXPECT_EQ(st.value.operands[1].name, "strato");
}

TEST(Parse, InPlaceConstruction) {
  auto k = parse_kernel("i_T = [j_T, j_T+1]");
  const auto& v = statement_at(k, 0).value;
  ASSERT_EQ(v.kind, Expr::Kind::construct);
  ASSERT_EQ(v.operands.size(), 2u);
  EXPECT_EQ(v.operands[1].kind, Expr::Kind::binary);
}

TEST(Parse, MissingParenReportedAtEndOfLine) {
  std::string src = "tau = (a[i,j] * b[j])";
  src.pop_back();
  try {
    parse_kernel(src);
    FAIL() << "expected a syntax error";
  } catch (const CompileError& e) {
    const auto& d = e.diagnostics().front();
    EXPECT_EQ(d.span.line, 1);
    EXPECT_EQ(d.span.column, static_cast<int>(src.size()) + 1);
    EXPECT_EQ(d.span.offset, src.size());
    bool wants_paren = false;
    for (const auto& t : d.expected) wants_paren |= t == ")";
    EXPECT_TRUE(wants_paren) << format_diagnostic(d);
  }
}

TEST(Parse, MultiLineErrorPointsAtFirstLine) {
  try {
    parse_kernel("y = (a * b\nz = 1\n");
    FAIL();
  } catch (const CompileError& e) {
    EXPECT_EQ(e.diagnostics().front().span.line, 1);
    EXPECT_EQ(e.diagnostics().front().span.column, 11);
  }
  try {
    parse_kernel("y = a *\n");
    FAIL();
  } catch (const CompileError& e) {
    EXPECT_EQ(e.diagnostics().front().span.line, 1);
    EXPECT_EQ(e.diagnostics().front().span.column, 8);
  }
}

TEST(Parse, RejectsStrayCharacters) {
  EXPECT_THROW(parse_kernel("y = a $ b"), CompileError);
  EXPECT_THROW(parse_kernel("tensor a : [2] of float:1:1;"), CompileError);
  EXPECT_THROW(parse_kernel("select = 1"), CompileError);
}

TEST(Parse, DemoFixtureMatchesFile) {
  EXPECT_EQ(read_file(std::string(BASECAMP_SOURCE_DIR) + "/demos/major_absorber.ekl"),
            std::string(demo::major_absorber_source));
}

TEST(Analyze, DemoFixtureReduction) {
  auto p = analyze(parse_kernel(demo::major_absorber_source));
  ASSERT_EQ(p.statements.size(), 6u);
  const auto& last = p.statements.back();
  EXPECT_EQ(last.target, "tau_abs");
  EXPECT_EQ(last.free_indices, (std::vector<std::string>{"x", "g"}));
  EXPECT_EQ(last.reduce_indices, (std::vector<std::string>{"t", "p", "e"}));
  EXPECT_EQ(p.find("tau_abs")->role, Role::output);
  EXPECT_EQ(p.find("i_T")->role, Role::intermediate);
  EXPECT_EQ(p.find("i_T")->format, NumericFormat::integer());
  EXPECT_EQ(p.find("i_T")->shape, (std::vector<std::int64_t>{16, 2}));
  EXPECT_EQ(p.find("i_strato")->shape, (std::vector<std::int64_t>{16}));
  EXPECT_EQ(p.find("i_flav")->format, NumericFormat::integer());
  EXPECT_EQ(p.find("k_major")->role, Role::input);
  EXPECT_EQ(p.find("x")->role, Role::index_domain);
}

TEST(Analyze, IdentityHasNoReduction) {
  auto p = analyze(parse_kernel("index i : 4;\ntensor a : [4];\ny[i] = a[i]\n"));
  ASSERT_EQ(p.statements.size(), 1u);
  EXPECT_TRUE(p.statements[0].reduce_indices.empty());
  EXPECT_EQ(p.statements[0].free_indices, (std::vector<std::string>{"i"}));
}

TEST(Analyze, SumFactoringMatchesDoubleSum) {
  const char* src = "index i : 3;\nindex j : 3;\nindex k : 3;\ntensor a : [3, 3];\ntensor b : [3];\ny[i] = a[i,j]*b[k]\n";
  auto p = analyze(parse_kernel(src));
  EXPECT_EQ(p.statements[0].reduce_indices, (std::vector<std::string>{"j", "k"}));
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(9), b(3);
    for (auto& v : a) v = rng.uniform(-1, 1);
    for (auto& v : b) v = rng.uniform(-1, 1);
    ir::TensorMap in;
    in["a"] = ir::DenseTensor::make({3, 3}, a);
    in["b"] = ir::DenseTensor::make({3}, b);
    auto r = oracle::run(p, in);
    for (int i = 0; i < 3; ++i) {
      double ra = 0, rb = 0;
      for (int j = 0; j < 3; ++j) ra += a[static_cast<std::size_t>(i * 3 + j)];
      for (int k = 0; k < 3; ++k) rb += b[static_cast<std::size_t>(k)];
      EXPECT_NEAR(r.tensors.at("y").values[static_cast<std::size_t>(i)], ra * rb, 1e-12);
    }
  }
}

TEST(Analyze, OmittedIndicesNeedParallelDeclaration) {
  auto d = diagnostics_of("index i : 4;\ntensor a : [4];\ny = a[i]\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].message.find("explicit index list"), std::string::npos);
  auto p = analyze(parse_kernel("index i : 4;\nparallel i;\ntensor a : [4];\ny = a[i]\n"));
  EXPECT_EQ(p.statements[0].free_indices, (std::vector<std::string>{"i"}));
}

TEST(Analyze, Errors) {
  struct Case {
    const char* src;
    const char* needle;
  };
  const Case cases[] = {
      {"index i : 4;\ny[i] = q[i]\n", "undeclared identifier 'q'"},
      {"index i : 4;\nindex j : 3;\ntensor a : [4, 4];\ny[i] = a[i, j]\n", "has extent 3"},
      {"index i : 4;\ntensor a : [4];\ntensor w : [4];\ny[i] = a[w[i]]\n", "integer elements"},
      {"index i : 4;\ntensor a : [4];\ny[i] = a[i+1]\n", "runs outside"},
      {"index i : 4;\ntensor a : [6];\ny[i] = a[i-1]\n", "runs outside"},
      {"index i : 4;\ntensor a : [4];\ny[i] = a[i*2]\n", "unsupported subscript"},
      {"index i : 4;\ntensor a : [4];\ny[i] = a[i, i]\n", "rank 1"},
      {"index i : 2;\ntensor a : [2];\ny[i] = [a[i], 1]\n", "cannot appear inside"},
      {"index i : 3;\ntensor a : [4];\ny[i] = [1, 2]\n", "2 element(s)"},
      {"index i : 2;\ny = [1, 2]\n", "explicit index list"},
      {"index i : 2;\ntensor a : [2];\ny[i] = a[i] + [1, 2]\n", "whole right-hand side"},
      {"index i : N;\n", "undeclared extent 'N'"},
      {"index i : 2;\ntensor i : [2];\n", "redefinition"},
      {"index i : 2;\ny[k] = 1\n", "not a declared index"},
      {"index i : 2;\ntensor a : [2];\ny[i, i] = a[i]\n", "repeated"},
  };
  for (const auto& c : cases) {
    auto d = diagnostics_of(c.src);
    ASSERT_FALSE(d.empty()) << c.src;
    EXPECT_NE(d[0].message.find(c.needle), std::string::npos) << c.src << " -> " << d[0].message;
  }
}

TEST(Analyze, DiagnosticSpansStayInBounds) {
  // Truncating a valid program at every byte yields either success or
  // diagnostics whose spans lie inside the truncated text.
  std::string src(demo::major_absorber_source);
  for (std::size_t n = 0; n <= src.size(); n += 3) {
    std::string cut = src.substr(0, n);
    try {
      analyze(parse_kernel(cut));
    } catch (const CompileError& e) {
      for (const auto& d : e.diagnostics()) {
        ASSERT_LE(d.span.offset + d.span.length, cut.size()) << n;
        ASSERT_GE(d.span.line, 1);
      }
    }
  }
}

TEST(Analyze, Deterministic) {
  auto k = parse_kernel(demo::major_absorber_source);
  auto a = analyze(k);
  auto b = analyze(k);
  ASSERT_EQ(a.symbols.size(), b.symbols.size());
  for (std::size_t i = 0; i < a.symbols.size(); ++i) {
    EXPECT_EQ(a.symbols[i].name, b.symbols[i].name);
    EXPECT_EQ(a.symbols[i].shape, b.symbols[i].shape);
    EXPECT_EQ(a.symbols[i].format, b.symbols[i].format);
  }
  for (std::size_t i = 0; i < a.statements.size(); ++i) {
    EXPECT_EQ(a.statements[i].value, b.statements[i].value);
    EXPECT_EQ(a.statements[i].reduce_indices, b.statements[i].reduce_indices);
  }
}

TEST(Print, ScalarConstant) {
  KernelSource k;
  Statement st;
  st.target.text = "c";
  st.value.kind = Expr::Kind::number;
  st.value.integer_literal = true;
  st.value.number = 1;
  k.items.push_back(st);
  EXPECT_EQ(pretty_print(k), "c = 1\n");
}

TEST(Print, DemoRoundTrip) {
  auto k = parse_kernel(demo::major_absorber_source);
  EXPECT_TRUE(round_trips(k));
  // Printing is a fixed point after one pass.
  std::string once = pretty_print(k);
  EXPECT_EQ(pretty_print(parse_kernel(once)), once);
}

TEST(Print, ParenthesisationPreservesTree) {
  for (const char* src : {"y = a - (b - c)", "y = (a - b) - c", "y = -(-a)", "y = a * -b", "y = -(a * b)",
                          "y = (a + b) * c", "y = a * (b * c)", "y = 1.0 + 2", "y = 0.1 * 1e-7"}) {
    auto k = parse_kernel(src);
    EXPECT_TRUE(round_trips(k)) << src << " printed as " << pretty_print(k);
  }
}

TEST(Print, RandomAstsRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    AstGen g(seed);
    auto k = g.program();
    ASSERT_TRUE(round_trips(k)) << pretty_print(k);
  }
}

TEST(Print, GeneratedKernelsRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto gk = gen::KernelGenerator(seed).generate();
    auto k = parse_kernel(gk.source);
    ASSERT_TRUE(round_trips(k)) << gk.source;
    ASSERT_NO_THROW(analyze(k)) << gk.source;
  }
}
