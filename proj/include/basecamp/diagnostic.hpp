#pragma once

#include <cstddef>
#include <sstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace basecamp {

/// Byte range into a source text plus the 1-based line/column of its start.
struct SourceSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
  int line = 1;
  int column = 1;

  bool operator==(const SourceSpan&) const = default;
};

struct Diagnostic {
  std::string message;
  SourceSpan span;
  // Token spellings the parser would have accepted; empty for semantic errors.
  std::vector<std::string> expected;
  // Stable machine-readable kind, e.g. "consumed-twice"; empty for syntax errors.
  std::string code;
  // A second location the message refers to (the first use of a value, ...).
  std::optional<SourceSpan> related;
};

inline std::string format_diagnostic(const Diagnostic& d, std::string_view file = {}) {
  std::ostringstream os;
  if (!file.empty()) os << file << ':';
  os << d.span.line << ':' << d.span.column << ": error: " << d.message;
  if (!d.expected.empty()) {
    os << " (expected ";
    for (std::size_t i = 0; i < d.expected.size(); ++i) {
      if (i) os << (i + 1 == d.expected.size() ? " or " : ", ");
      os << '\'' << d.expected[i] << '\'';
    }
    os << ')';
  }
  if (d.related) os << " [see " << d.related->line << ':' << d.related->column << ']';
  return os.str();
}

/// Raised by the kernel and coordination frontends. Carries every diagnostic
/// collected before the frontend gave up.
class CompileError : public std::runtime_error {
 public:
  explicit CompileError(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(diagnostics.empty() ? std::string("compile error")
                                               : format_diagnostic(diagnostics.front())),
        diagnostics_(std::move(diagnostics)) {}

  explicit CompileError(Diagnostic d) : CompileError(std::vector<Diagnostic>{std::move(d)}) {}

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Computes the line/column of `offset` in `text`.
inline SourceSpan make_span(std::string_view text, std::size_t offset, std::size_t length) {
  SourceSpan s;
  s.offset = offset;
  s.length = length;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++s.line;
      s.column = 1;
    } else {
      ++s.column;
    }
  }
  return s;
}

}  // namespace basecamp
