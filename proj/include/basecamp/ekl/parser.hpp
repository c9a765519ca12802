#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "basecamp/diagnostic.hpp"
#include "basecamp/ekl/ast.hpp"
#include "basecamp/numerics.hpp"

namespace basecamp::ekl {

enum class TokenKind { identifier, integer, real, punct, newline, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;
  SourceSpan span;
};

/// Splits kernel source into tokens. Newlines are significant (they end
/// statements) except inside parentheses or brackets. `//` starts a comment.
inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  int depth = 0;

  auto span_at = [&](std::size_t start, int l, int c, std::size_t len) {
    return SourceSpan{start, len, l, c};
  };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      if (depth == 0) out.push_back({TokenKind::newline, "\n", span_at(i, line, col, 1)});
      advance(1);
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    std::size_t start = i;
    int l = line;
    int cl = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({TokenKind::identifier, std::string(src.substr(i, j - i)), span_at(start, l, cl, j - i)});
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      bool real = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        real = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          real = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      out.push_back({real ? TokenKind::real : TokenKind::integer, std::string(src.substr(i, j - i)),
                     span_at(start, l, cl, j - i)});
      advance(j - i);
      continue;
    }
    static constexpr std::string_view two[] = {"<=", ">=", "==", "!="};
    std::string_view p;
    for (auto t : two)
      if (src.substr(i, 2) == t) p = t;
    if (p.empty()) {
      static constexpr std::string_view one = "[](),;:=+-*<>";
      if (one.find(c) == std::string_view::npos) {
        throw CompileError(Diagnostic{std::string("unexpected character '") + c + "'",
                                      span_at(start, l, cl, 1), {}, {}, {}});
      }
      p = src.substr(i, 1);
    }
    if (p == "(" || p == "[") ++depth;
    if ((p == ")" || p == "]") && depth > 0) --depth;
    out.push_back({TokenKind::punct, std::string(p), span_at(start, l, cl, p.size())});
    advance(p.size());
  }
  out.push_back({TokenKind::end, "", span_at(i, line, col, 0)});
  return out;
}

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), tokens_(tokenize(src)) {}

  KernelSource parse_program() {
    KernelSource k;
    while (!at_end()) {
      if (accept_newline()) continue;
      if (peek_punct(";")) {
        next();
        continue;
      }
      k.items.push_back(parse_item());
      end_item();
    }
    return k;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  bool at_end() const { return cur().kind == TokenKind::end; }

  const Token& next() {
    expected_.clear();
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }

  bool peek_punct(std::string_view p) const {
    return cur().kind == TokenKind::punct && cur().text == p;
  }
  bool peek_keyword(std::string_view k) const {
    return cur().kind == TokenKind::identifier && cur().text == k;
  }

  bool accept_punct(std::string_view p) {
    if (peek_punct(p)) {
      next();
      return true;
    }
    expected_.insert(std::string(p));
    return false;
  }

  bool accept_newline() {
    if (cur().kind == TokenKind::newline) {
      next();
      return true;
    }
    return false;
  }

  const Token& expect_punct(std::string_view p) {
    if (!peek_punct(p)) {
      expected_.insert(std::string(p));
      fail("unexpected " + describe(cur()));
    }
    return next();
  }

  Identifier expect_identifier(const char* what) {
    if (cur().kind != TokenKind::identifier || is_reserved(cur().text)) {
      expected_.insert(what);
      fail("unexpected " + describe(cur()));
    }
    const Token& t = next();
    return Identifier{t.text, t.span};
  }

  std::int64_t expect_integer() {
    if (cur().kind != TokenKind::integer) {
      expected_.insert("integer");
      fail("unexpected " + describe(cur()));
    }
    const Token& t = next();
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc()) throw CompileError(Diagnostic{"integer literal out of range", t.span, {}, {}, {}});
    return v;
  }

  static bool is_reserved(std::string_view s) {
    return s == "const" || s == "index" || s == "tensor" || s == "scalar" || s == "parallel" ||
           s == "of" || s == "select";
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case TokenKind::newline: return "end of line";
      case TokenKind::end: return "end of input";
      default: return "'" + t.text + "'";
    }
  }

  [[noreturn]] void fail(const std::string& message) {
    // Errors at a line break or at the end of input are reported right after
    // the last consumed token, i.e. at the end of the offending line.
    SourceSpan at = cur().span;
    if (pos_ > 0) {
      const Token& prev = tokens_[pos_ - 1];
      bool detached = cur().kind == TokenKind::newline || cur().kind == TokenKind::end ||
                      cur().span.line != prev.span.line;
      if (detached && prev.kind != TokenKind::newline) {
        std::size_t end = prev.span.offset + prev.span.length;
        at = make_span(src_, end, 0);
      }
    }
    std::vector<std::string> expected(expected_.begin(), expected_.end());
    throw CompileError(Diagnostic{message, at, std::move(expected), {}, {}});
  }

  SourceSpan span_from(const SourceSpan& start) const {
    const Token& last = tokens_[pos_ > 0 ? pos_ - 1 : 0];
    std::size_t end = last.span.offset + last.span.length;
    SourceSpan s = start;
    s.length = end > start.offset ? end - start.offset : 0;
    return s;
  }

  void end_item() {
    if (at_end()) return;
    if (accept_newline()) return;
    if (accept_punct(";")) return;
    expected_.insert("end of line");
    fail("unexpected " + describe(cur()) + " after statement");
  }

  Item parse_item() {
    SourceSpan start = cur().span;
    if (peek_keyword("const")) {
      next();
      ConstDecl d;
      d.name = expect_identifier("identifier");
      expect_punct("=");
      d.value = expect_integer();
      d.span = span_from(start);
      return d;
    }
    if (peek_keyword("index")) {
      next();
      IndexDecl d;
      d.name = expect_identifier("identifier");
      expect_punct(":");
      d.extent = parse_extent();
      d.span = span_from(start);
      return d;
    }
    if (peek_keyword("tensor")) {
      next();
      TensorDecl d;
      d.name = expect_identifier("identifier");
      expect_punct(":");
      expect_punct("[");
      d.dims.push_back(parse_extent());
      while (accept_punct(",")) d.dims.push_back(parse_extent());
      expect_punct("]");
      if (peek_keyword("of")) {
        next();
        d.element = parse_element_type();
      } else {
        expected_.insert("of");
      }
      d.span = span_from(start);
      return d;
    }
    if (peek_keyword("scalar")) {
      next();
      TensorDecl d;
      d.scalar = true;
      d.name = expect_identifier("identifier");
      if (accept_punct(":")) d.element = parse_element_type();
      d.span = span_from(start);
      return d;
    }
    if (peek_keyword("parallel")) {
      next();
      ParallelDecl d;
      d.indices.push_back(expect_identifier("identifier"));
      while (accept_punct(",")) d.indices.push_back(expect_identifier("identifier"));
      d.span = span_from(start);
      return d;
    }
    return parse_statement();
  }

  Extent parse_extent() {
    Extent x;
    x.span = cur().span;
    if (cur().kind == TokenKind::integer) {
      x.value = expect_integer();
    } else {
      expected_.insert("integer");
      x.name = expect_identifier("identifier").text;
    }
    return x;
  }

  NumericFormat parse_element_type() {
    SourceSpan start = cur().span;
    Identifier kind = expect_identifier("element type");
    if (kind.text == "int") return NumericFormat::integer();
    if (kind.text == "f64") return NumericFormat::ieee_double();
    if (kind.text != "fixed" && kind.text != "ufixed" && kind.text != "float") {
      throw CompileError(Diagnostic{"unknown element type '" + kind.text + "'", kind.span,
                                    {"int", "f64", "fixed", "ufixed", "float"}, {}, {}});
    }
    expect_punct(":");
    std::int64_t a = expect_integer();
    expect_punct(":");
    std::int64_t b = expect_integer();
    std::string text = kind.text + ":" + std::to_string(a) + ":" + std::to_string(b);
    try {
      return parse_format(text);
    } catch (const FormatError& e) {
      throw CompileError(Diagnostic{std::string("invalid element type: ") + e.what(), span_from(start), {}, {}, {}});
    }
  }

  Statement parse_statement() {
    Statement s;
    SourceSpan start = cur().span;
    s.target = expect_identifier("identifier");
    if (accept_punct("[")) {
      std::vector<Identifier> idx;
      idx.push_back(expect_identifier("identifier"));
      while (accept_punct(",")) idx.push_back(expect_identifier("identifier"));
      expect_punct("]");
      s.indices = std::move(idx);
    }
    expect_punct("=");
    s.value = parse_expr();
    s.span = span_from(start);
    return s;
  }

  Expr parse_expr() {
    SourceSpan start = cur().span;
    Expr lhs = parse_term();
    for (;;) {
      BinaryOp op;
      if (accept_punct("+")) {
        op = BinaryOp::add;
      } else if (accept_punct("-")) {
        op = BinaryOp::sub;
      } else {
        break;
      }
      Expr rhs = parse_term();
      lhs = make_binary(op, std::move(lhs), std::move(rhs), start);
    }
    return lhs;
  }

  Expr parse_term() {
    SourceSpan start = cur().span;
    Expr lhs = parse_unary();
    while (accept_punct("*")) {
      Expr rhs = parse_unary();
      lhs = make_binary(BinaryOp::mul, std::move(lhs), std::move(rhs), start);
    }
    return lhs;
  }

  Expr make_binary(BinaryOp op, Expr lhs, Expr rhs, SourceSpan start) {
    Expr e;
    e.kind = Expr::Kind::binary;
    e.op = op;
    e.operands.push_back(std::move(lhs));
    e.operands.push_back(std::move(rhs));
    e.span = span_from(start);
    return e;
  }

  Expr parse_unary() {
    SourceSpan start = cur().span;
    if (accept_punct("-")) {
      Expr e;
      e.kind = Expr::Kind::negate;
      e.operands.push_back(parse_unary());
      e.span = span_from(start);
      return e;
    }
    return parse_primary();
  }

  Expr parse_primary() {
    SourceSpan start = cur().span;
    const Token& t = cur();
    if (t.kind == TokenKind::integer || t.kind == TokenKind::real) {
      Expr e;
      e.kind = Expr::Kind::number;
      e.integer_literal = t.kind == TokenKind::integer;
      e.number = std::strtod(t.text.c_str(), nullptr);
      next();
      e.span = span_from(start);
      return e;
    }
    if (peek_keyword("select")) {
      next();
      expect_punct("(");
      Expr e;
      e.kind = Expr::Kind::select;
      e.operands.push_back(parse_expr());
      static constexpr std::pair<std::string_view, CompareOp> ops[] = {
          {"<=", CompareOp::le}, {"<", CompareOp::lt}, {">=", CompareOp::ge},
          {">", CompareOp::gt},  {"==", CompareOp::eq}, {"!=", CompareOp::ne}};
      bool found = false;
      for (auto [text, op] : ops) {
        if (accept_punct(text)) {
          e.compare = op;
          found = true;
          break;
        }
      }
      if (!found) fail("select condition needs a comparison, found " + describe(cur()));
      e.operands.push_back(parse_expr());
      expect_punct(",");
      e.operands.push_back(parse_expr());
      expect_punct(",");
      e.operands.push_back(parse_expr());
      expect_punct(")");
      e.span = span_from(start);
      return e;
    }
    if (t.kind == TokenKind::identifier && !is_reserved(t.text)) {
      Expr e;
      e.kind = Expr::Kind::access;
      e.name = next().text;
      if (accept_punct("[")) {
        e.subscripts.push_back(parse_expr());
        while (accept_punct(",")) e.subscripts.push_back(parse_expr());
        expect_punct("]");
      }
      e.span = span_from(start);
      return e;
    }
    if (accept_punct("(")) {
      Expr e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (accept_punct("[")) {
      Expr e;
      e.kind = Expr::Kind::construct;
      e.operands.push_back(parse_expr());
      while (accept_punct(",")) e.operands.push_back(parse_expr());
      expect_punct("]");
      e.span = span_from(start);
      return e;
    }
    expected_.insert("number");
    expected_.insert("identifier");
    expected_.insert("select");
    expected_.insert("-");
    fail("expected an expression, found " + describe(cur()));
  }

  std::string_view src_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::set<std::string> expected_;
};

}  // namespace detail

/// Parses kernel source. Throws CompileError with the first syntax error.
inline KernelSource parse_kernel(std::string_view source) {
  detail::Parser p(source);
  return p.parse_program();
}

}  // namespace basecamp::ekl
