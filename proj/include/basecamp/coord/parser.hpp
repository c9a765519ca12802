#pragma once

// Coordination language: one straight-line Rust-like function whose let
// bindings call software functions or offloaded kernels.
//
//   fn match_one(gv: GpsVector, mapcell: MapCell) -> RoadSpeedVector {
//       #[kernel(offloaded = true, multiplicity = [1, 1], path = "p.cpp")]
//       let cv: CandiVector = projection(gv, mapcell);
//       ...
//       interpolate(rsv, mapcell2)
//   }

#include <cctype>
#include <charconv>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "basecamp/diagnostic.hpp"

namespace basecamp::coord {

struct Name {
  std::string text;
  SourceSpan span;
};

struct KernelAttribute {
  bool offloaded = false;
  std::vector<std::int64_t> multiplicity;
  std::string path;
  SourceSpan span;
};

struct Call {
  Name callee;
  std::vector<Name> args;
  SourceSpan span;
};

struct Binding {
  std::optional<KernelAttribute> attribute;
  Name name;
  Name type;
  Call call;
  SourceSpan span;
};

struct Param {
  Name name;
  Name type;
};

struct CoordFunction {
  Name name;
  std::vector<Param> params;
  Name result_type;
  std::vector<Binding> bindings;
  // The trailing expression: a call or a bare name.
  std::optional<Call> result_call;
  std::optional<Name> result_name;
  SourceSpan span;

  std::size_t call_count() const {
    std::size_t n = result_call ? 1 : 0;
    for (const auto& b : bindings) n += b.call.callee.text != "clone";
    return n;
  }
};

namespace detail {

enum class Tok { ident, integer, string, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  SourceSpan span;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto span = [&](std::size_t start, std::size_t len) { return make_span(src, start, len); };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      out.push_back({Tok::ident, std::string(src.substr(start, i - start)), span(start, i - start)});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      out.push_back({Tok::integer, std::string(src.substr(start, i - start)), span(start, i - start)});
      continue;
    }
    if (c == '"') {
      ++i;
      std::string text;
      while (i < src.size() && src[i] != '"' && src[i] != '\n') text += src[i++];
      if (i >= src.size() || src[i] != '"')
        throw CompileError(Diagnostic{"unterminated string literal", span(start, i - start), {}, {}, {}});
      ++i;
      out.push_back({Tok::string, text, span(start, i - start)});
      continue;
    }
    if (src.substr(i, 2) == "->") {
      out.push_back({Tok::punct, "->", span(start, 2)});
      i += 2;
      continue;
    }
    static constexpr std::string_view one = "(){}[],:;=#<>";
    if (one.find(c) == std::string_view::npos)
      throw CompileError(Diagnostic{std::string("unexpected character '") + c + "'", span(start, 1), {}, {}, {}});
    out.push_back({Tok::punct, std::string(1, c), span(start, 1)});
    ++i;
  }
  out.push_back({Tok::end, "", make_span(src, src.size(), 0)});
  return out;
}

class CoordParser {
 public:
  explicit CoordParser(std::string_view src) : src_(src), toks_(lex(src)) {}

  CoordFunction parse() {
    CoordFunction f;
    SourceSpan start = cur().span;
    expect_keyword("fn");
    f.name = expect_ident();
    expect("(");
    if (!accept(")")) {
      do {
        Param p;
        p.name = expect_ident();
        expect(":");
        p.type = parse_type();
        f.params.push_back(std::move(p));
      } while (accept(","));
      expect(")");
    }
    expect("->");
    f.result_type = parse_type();
    expect("{");
    for (;;) {
      if (at("#") || at_keyword("let")) {
        f.bindings.push_back(parse_binding());
        continue;
      }
      break;
    }
    SourceSpan rs = cur().span;
    Name n = expect_ident();
    if (at("(")) {
      f.result_call = parse_call_args(std::move(n), rs);
    } else {
      f.result_name = std::move(n);
    }
    expect("}");
    f.span = span_from(start);
    if (cur().kind != Tok::end) fail("unexpected " + describe(cur()) + " after the function body");
    return f;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  bool at(std::string_view p) const { return cur().kind == Tok::punct && cur().text == p; }
  bool at_keyword(std::string_view k) const { return cur().kind == Tok::ident && cur().text == k; }

  const Token& take() {
    expected_.clear();
    const Token& t = toks_[pos_];
    if (t.kind != Tok::end) ++pos_;
    return t;
  }

  bool accept(std::string_view p) {
    if (at(p)) {
      take();
      return true;
    }
    expected_.insert(std::string(p));
    return false;
  }

  void expect(std::string_view p) {
    if (!accept(p)) fail("unexpected " + describe(cur()));
  }

  void expect_keyword(std::string_view k) {
    if (!at_keyword(k)) {
      expected_.insert(std::string(k));
      fail("unexpected " + describe(cur()));
    }
    take();
  }

  Name expect_ident() {
    if (cur().kind != Tok::ident || is_keyword(cur().text)) {
      expected_.insert("identifier");
      fail("unexpected " + describe(cur()));
    }
    const Token& t = take();
    return {t.text, t.span};
  }

  static bool is_keyword(std::string_view s) { return s == "fn" || s == "let" || s == "true" || s == "false"; }

  static std::string describe(const Token& t) {
    if (t.kind == Tok::end) return "end of input";
    if (t.kind == Tok::string) return "string \"" + t.text + "\"";
    return "'" + t.text + "'";
  }

  [[noreturn]] void fail(const std::string& message) {
    throw CompileError(Diagnostic{message, cur().span, {expected_.begin(), expected_.end()}, {}, {}});
  }

  SourceSpan span_from(const SourceSpan& start) const {
    const Token& last = toks_[pos_ > 0 ? pos_ - 1 : 0];
    SourceSpan s = start;
    std::size_t end = last.span.offset + last.span.length;
    s.length = end > start.offset ? end - start.offset : 0;
    return s;
  }

  // Types are names with optional generic arguments, kept as text: Vec<Gps>.
  Name parse_type() {
    SourceSpan start = cur().span;
    Name n = expect_ident();
    if (accept("<")) {
      n.text += '<';
      do {
        n.text += parse_type().text;
        if (at(",")) n.text += ", ";
      } while (accept(","));
      expect(">");
      n.text += '>';
    }
    n.span = span_from(start);
    return n;
  }

  std::int64_t expect_int() {
    if (cur().kind != Tok::integer) {
      expected_.insert("integer");
      fail("unexpected " + describe(cur()));
    }
    const Token& t = take();
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc()) throw CompileError(Diagnostic{"integer literal out of range", t.span, {}, {}, {}});
    return v;
  }

  KernelAttribute parse_attribute() {
    KernelAttribute a;
    SourceSpan start = cur().span;
    expect("#");
    expect("[");
    expect_keyword("kernel");
    expect("(");
    std::set<std::string> seen;
    bool has_path = false;
    do {
      Name key = expect_ident();
      if (!seen.insert(key.text).second)
        throw CompileError(
            Diagnostic{"duplicate kernel attribute key '" + key.text + "'", key.span, {}, "duplicate-attribute", {}});
      expect("=");
      if (key.text == "offloaded") {
        if (!at_keyword("true") && !at_keyword("false")) {
          expected_ = {"true", "false"};
          fail("unexpected " + describe(cur()));
        }
        a.offloaded = take().text == "true";
      } else if (key.text == "multiplicity") {
        expect("[");
        if (!at("]")) {
          do {
            a.multiplicity.push_back(expect_int());
          } while (accept(","));
        }
        expect("]");
      } else if (key.text == "path") {
        if (cur().kind != Tok::string) {
          expected_.insert("string");
          fail("unexpected " + describe(cur()));
        }
        a.path = take().text;
        has_path = true;
      } else {
        throw CompileError(Diagnostic{"unknown kernel attribute key '" + key.text +
                                          "' (expected offloaded, multiplicity or path)",
                                      key.span, {}, "unknown-attribute", {}});
      }
    } while (accept(","));
    expect(")");
    expect("]");
    a.span = span_from(start);
    if (a.offloaded && (!has_path || a.path.empty()))
      throw CompileError(Diagnostic{"an offloaded kernel needs a non-empty path", a.span, {}, "missing-path", {}});
    for (auto m : a.multiplicity)
      if (m < 1) throw CompileError(Diagnostic{"multiplicity entries must be at least 1", a.span, {}, {}, {}});
    return a;
  }

  Call parse_call_args(Name callee, SourceSpan start) {
    Call c;
    c.callee = std::move(callee);
    expect("(");
    if (!at(")")) {
      do {
        c.args.push_back(expect_ident());
      } while (accept(","));
    }
    expect(")");
    c.span = span_from(start);
    return c;
  }

  Binding parse_binding() {
    Binding b;
    SourceSpan start = cur().span;
    if (at("#")) b.attribute = parse_attribute();
    expect_keyword("let");
    b.name = expect_ident();
    expect(":");
    b.type = parse_type();
    expect("=");
    SourceSpan cs = cur().span;
    Name callee = expect_ident();
    b.call = parse_call_args(std::move(callee), cs);
    expect(";");
    b.span = span_from(start);
    return b;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> expected_;
};

}  // namespace detail

/// Parses one coordination function. Throws CompileError with a span and the
/// expected-token set on syntax errors, and on unknown or repeated kernel
/// attribute keys.
inline CoordFunction parse_coord(std::string_view source) { return detail::CoordParser(source).parse(); }

}  // namespace basecamp::coord
