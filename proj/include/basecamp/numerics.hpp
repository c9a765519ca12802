#pragma once

// Parametric low-precision formats. Values always travel as IEEE doubles; a
// NumericFormat only restricts which doubles are legal.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>

namespace basecamp {

enum class FormatKind { ieee_double, fixed, minifloat };

struct NumericFormat {
  FormatKind kind = FormatKind::ieee_double;
  // fixed: int_bits includes the sign bit when is_signed.
  int int_bits = 0;
  int frac_bits = 0;
  bool is_signed = true;
  // minifloat: mantissa_bits excludes the implicit leading one.
  int exp_bits = 0;
  int mantissa_bits = 0;

  static constexpr NumericFormat ieee_double() { return {}; }
  static constexpr NumericFormat fixed(int int_bits, int frac_bits, bool is_signed = true) {
    NumericFormat f;
    f.kind = FormatKind::fixed;
    f.int_bits = int_bits;
    f.frac_bits = frac_bits;
    f.is_signed = is_signed;
    return f;
  }
  static constexpr NumericFormat minifloat(int exp_bits, int mantissa_bits) {
    NumericFormat f;
    f.kind = FormatKind::minifloat;
    f.exp_bits = exp_bits;
    f.mantissa_bits = mantissa_bits;
    return f;
  }
  /// Integer tensors (subscript tables, selections) are fixed-point with no fraction.
  static constexpr NumericFormat integer() { return fixed(32, 0); }

  bool operator==(const NumericFormat&) const = default;
};

/// Thrown for malformed or out-of-range format descriptions.
class FormatError : public std::invalid_argument {
 public:
  FormatError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

constexpr int bit_width(const NumericFormat& f) {
  switch (f.kind) {
    case FormatKind::fixed: return f.int_bits + f.frac_bits;
    case FormatKind::minifloat: return 1 + f.exp_bits + f.mantissa_bits;
    case FormatKind::ieee_double: break;
  }
  return 64;
}

constexpr bool is_integer_format(const NumericFormat& f) {
  return f.kind == FormatKind::fixed && f.frac_bits == 0;
}

inline void validate(const NumericFormat& f) {
  switch (f.kind) {
    case FormatKind::ieee_double: return;
    case FormatKind::fixed:
      if (f.int_bits < 1) throw FormatError("int_bits", "must be at least 1");
      if (f.frac_bits < 0) throw FormatError("frac_bits", "must be non-negative");
      if (f.int_bits + f.frac_bits > 64)
        throw FormatError("frac_bits", "int_bits + frac_bits must not exceed 64");
      return;
    case FormatKind::minifloat:
      if (f.exp_bits < 2 || f.exp_bits > 11) throw FormatError("exp_bits", "must be in [2, 11]");
      if (f.mantissa_bits < 1 || f.mantissa_bits > 52)
        throw FormatError("mantissa_bits", "must be in [1, 52]");
      return;
  }
}

inline std::string to_string(const NumericFormat& f) {
  switch (f.kind) {
    case FormatKind::fixed:
      return std::string(f.is_signed ? "fixed:" : "ufixed:") + std::to_string(f.int_bits) + ':' +
             std::to_string(f.frac_bits);
    case FormatKind::minifloat:
      return "float:" + std::to_string(f.exp_bits) + ':' + std::to_string(f.mantissa_bits);
    case FormatKind::ieee_double: break;
  }
  return "f64";
}

namespace detail {

inline int parse_width_field(std::string_view text, const char* field) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError(field, "expected an integer, got '" + std::string(text) + "'");
  return value;
}

}  // namespace detail

/// Accepts `f64`, `fixed:<int>:<frac>`, `ufixed:<int>:<frac>` and `float:<exp>:<mantissa>`.
inline NumericFormat parse_format(std::string_view text) {
  if (text == "f64") return NumericFormat::ieee_double();
  auto first = text.find(':');
  if (first == std::string_view::npos)
    throw FormatError("kind", "unknown format '" + std::string(text) + "'");
  auto kind = text.substr(0, first);
  auto rest = text.substr(first + 1);
  auto second = rest.find(':');
  bool is_fixed = kind == "fixed" || kind == "ufixed";
  if (!is_fixed && kind != "float")
    throw FormatError("kind", "unknown format kind '" + std::string(kind) + "'");
  const char* a_name = is_fixed ? "int_bits" : "exp_bits";
  const char* b_name = is_fixed ? "frac_bits" : "mantissa_bits";
  if (second == std::string_view::npos) throw FormatError(b_name, "missing field");
  int a = detail::parse_width_field(rest.substr(0, second), a_name);
  int b = detail::parse_width_field(rest.substr(second + 1), b_name);
  NumericFormat f = is_fixed ? NumericFormat::fixed(a, b, kind == "fixed")
                             : NumericFormat::minifloat(a, b);
  validate(f);
  return f;
}

/// Largest finite value of the format.
inline double max_value(const NumericFormat& f) {
  switch (f.kind) {
    case FormatKind::fixed: {
      int n = bit_width(f);
      double raw = f.is_signed ? std::ldexp(1.0, n - 1) - 1.0 : std::ldexp(1.0, n) - 1.0;
      return std::ldexp(raw, -f.frac_bits);
    }
    case FormatKind::minifloat: {
      int emax = (1 << (f.exp_bits - 1)) - 1;
      return std::ldexp(2.0 - std::ldexp(1.0, -f.mantissa_bits), emax);
    }
    case FormatKind::ieee_double: break;
  }
  return std::numeric_limits<double>::max();
}

/// Most negative finite value of the format.
inline double lowest_value(const NumericFormat& f) {
  if (f.kind == FormatKind::fixed) {
    if (!f.is_signed) return 0.0;
    return -std::ldexp(1.0, bit_width(f) - 1 - f.frac_bits);
  }
  return -max_value(f);
}

/// Rounds to the nearest representable value, ties to even. Out-of-range
/// values (including infinities) saturate; NaN propagates.
///
/// Minifloats follow the IEEE layout: bias 2^(e-1)-1, the all-ones exponent
/// is reserved, and subnormals are representable.
inline double quantize(double x, const NumericFormat& f) {
  if (f.kind == FormatKind::ieee_double || std::isnan(x)) return x;
  if (f.kind == FormatKind::fixed) {
    double lo = lowest_value(f);
    double hi = max_value(f);
    if (std::isinf(x)) return x > 0 ? hi : lo;
    double raw = std::nearbyint(std::ldexp(x, f.frac_bits));
    double v = std::ldexp(raw, -f.frac_bits);
    if (v < lo) return lo;
    if (v > hi) return hi;
    return v;
  }
  double hi = max_value(f);
  double a = std::fabs(x);
  if (a == 0.0) return x;
  if (std::isinf(a)) return std::copysign(hi, x);
  int bias = (1 << (f.exp_bits - 1)) - 1;
  int emin = 1 - bias;
  int e2 = 0;
  std::frexp(a, &e2);
  int exponent = e2 - 1 < emin ? emin : e2 - 1;
  int quantum = exponent - f.mantissa_bits;
  double r = std::ldexp(std::nearbyint(std::ldexp(a, -quantum)), quantum);
  if (r > hi) r = hi;
  return std::copysign(r, x);
}

/// Number of elements of `f` that fit side by side on a bus of `bus_width` bits.
inline int packed_lane_count(int bus_width, const NumericFormat& f) {
  int w = bit_width(f);
  if (bus_width < w)
    throw std::invalid_argument("bus width " + std::to_string(bus_width) +
                                " is narrower than one " + to_string(f) + " element");
  return bus_width / w;
}

}  // namespace basecamp
