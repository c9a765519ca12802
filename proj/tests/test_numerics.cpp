#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "basecamp/numerics.hpp"
#include "basecamp/random.hpp"

using basecamp::FormatError;
using basecamp::FormatKind;
using basecamp::NumericFormat;
using basecamp::parse_format;
using basecamp::quantize;

namespace {

// Every finite value of an IEEE-style minifloat, built from its bit fields.
std::vector<double> enumerate_minifloat(int e, int m) {
  std::vector<double> out;
  int bias = (1 << (e - 1)) - 1;
  for (int sign = 0; sign < 2; ++sign) {
    for (int exp = 0; exp < (1 << e) - 1; ++exp) {
      for (int man = 0; man < (1 << m); ++man) {
        double v = exp == 0 ? std::ldexp(static_cast<double>(man), 1 - bias - m)
                            : std::ldexp(static_cast<double>((1 << m) + man), exp - bias - m);
        out.push_back(sign ? -v : v);
      }
    }
  }
  return out;
}

double nearest(const std::vector<double>& grid, double x) {
  double best = grid.front();
  for (double g : grid)
    if (std::fabs(g - x) < std::fabs(best - x)) best = g;
  return best;
}

}  // namespace

TEST(Format, ParsesExamples) {
  EXPECT_EQ(parse_format("f64"), NumericFormat::ieee_double());
  EXPECT_EQ(parse_format("fixed:8:8"), NumericFormat::fixed(8, 8, true));
  EXPECT_EQ(parse_format("float:5:2"), NumericFormat::minifloat(5, 2));
  EXPECT_EQ(parse_format("ufixed:4:4"), NumericFormat::fixed(4, 4, false));
}

TEST(Format, RejectsBadWidthsNamingTheField) {
  auto field_of = [](const char* spec) {
    try {
      parse_format(spec);
    } catch (const FormatError& e) {
      return e.field();
    }
    return std::string("none");
  };
  EXPECT_EQ(field_of("fixed:0:8"), "int_bits");
  EXPECT_EQ(field_of("fixed:40:40"), "frac_bits");
  EXPECT_EQ(field_of("float:1:2"), "exp_bits");
  EXPECT_EQ(field_of("float:5:0"), "mantissa_bits");
  EXPECT_EQ(field_of("float:5"), "mantissa_bits");
  EXPECT_EQ(field_of("fixed:a:3"), "int_bits");
  EXPECT_EQ(field_of("double"), "kind");
  EXPECT_EQ(field_of("bf:8:7"), "kind");
}

TEST(Format, BitWidth) {
  EXPECT_EQ(bit_width(NumericFormat{}), 64);
  EXPECT_EQ(bit_width(parse_format("fixed:8:8")), 16);
  EXPECT_EQ(bit_width(parse_format("float:5:2")), 8);
  EXPECT_EQ(to_string(parse_format("ufixed:3:1")), "ufixed:3:1");
}

TEST(Quantize, Examples) {
  EXPECT_EQ(quantize(1.0, parse_format("float:5:2")), 1.0);
  EXPECT_EQ(quantize(0.1, parse_format("fixed:8:8")), 0.1015625);
  EXPECT_EQ(quantize(0.1, parse_format("float:5:2")), 0.09375);
  EXPECT_EQ(quantize(0.1, NumericFormat{}), 0.1);
}

TEST(Quantize, FixedAgreesWithNeighbourComparison) {
  // Oracle: the two multiples of 2^-8 around x, pick the closer one.
  basecamp::Rng rng(7);
  auto f = parse_format("fixed:8:8");
  for (int i = 0; i < 20000; ++i) {
    double x = rng.uniform(-127.0, 127.0);
    double lo = std::floor(x * 256.0) / 256.0;
    double hi = lo + 1.0 / 256.0;
    double want = (x - lo < hi - x) ? lo : (hi - x < x - lo) ? hi : (std::fmod(lo * 256.0, 2.0) == 0 ? lo : hi);
    ASSERT_EQ(quantize(x, f), want) << x;
  }
}

TEST(Quantize, FixedSaturatesAndTiesToEven) {
  auto f = parse_format("fixed:4:0");
  EXPECT_EQ(quantize(100.0, f), 7.0);
  EXPECT_EQ(quantize(-100.0, f), -8.0);
  EXPECT_EQ(quantize(2.5, f), 2.0);
  EXPECT_EQ(quantize(3.5, f), 4.0);
  EXPECT_EQ(quantize(-2.5, f), -2.0);
  EXPECT_EQ(quantize(std::numeric_limits<double>::infinity(), f), 7.0);
  EXPECT_EQ(quantize(-5.0, parse_format("ufixed:4:0")), 0.0);
  EXPECT_EQ(quantize(99.0, parse_format("ufixed:4:0")), 15.0);
  EXPECT_TRUE(std::isnan(quantize(std::nan(""), f)));
}

TEST(Quantize, MinifloatSpecials) {
  auto f = parse_format("float:5:2");
  EXPECT_EQ(basecamp::max_value(f), 57344.0);
  EXPECT_EQ(quantize(1e9, f), 57344.0);
  EXPECT_EQ(quantize(-1e9, f), -57344.0);
  EXPECT_EQ(quantize(-std::numeric_limits<double>::infinity(), f), -57344.0);
  EXPECT_TRUE(std::isnan(quantize(std::nan(""), f)));
  // Smallest subnormal of e5m2 is 2^-16; half of it rounds to zero (even).
  EXPECT_EQ(quantize(std::ldexp(1.0, -16), f), std::ldexp(1.0, -16));
  EXPECT_EQ(quantize(std::ldexp(1.0, -17), f), 0.0);
  EXPECT_EQ(quantize(std::ldexp(3.0, -18), f), std::ldexp(1.0, -16));
}

TEST(Quantize, MinifloatMatchesExhaustiveSearch) {
  basecamp::Rng rng(11);
  for (int e = 2; e <= 7; ++e) {
    for (int m = 1; 1 + e + m <= 10; ++m) {
      auto f = NumericFormat::minifloat(e, m);
      auto grid = enumerate_minifloat(e, m);
      double top = basecamp::max_value(f);
      // Ties: prefer the grid point that is an even multiple of its own spacing.
      int bias = (1 << (e - 1)) - 1;
      auto odd_mantissa = [&](double g) -> double {
        double a = std::fabs(g);
        if (a == 0.0) return 0.0;
        int ex = 0;
        std::frexp(a, &ex);
        int q = std::max(ex - 1, 1 - bias) - m;
        return std::fmod(std::ldexp(a, -q), 2.0);
      };
      std::vector<double> probes;
      for (double g : grid) probes.push_back(g);
      for (std::size_t i = 0; i + 1 < grid.size(); ++i) probes.push_back((grid[i] + grid[i + 1]) / 2);
      for (int i = 0; i < 400; ++i) probes.push_back(rng.uniform(-top, top));
      for (int i = 0; i < 400; ++i) probes.push_back(rng.uniform(-1.0, 1.0) * std::ldexp(1.0, 1 - bias));
      for (double x : probes) {
        double want = nearest(grid, x);
        // Resolve exact ties by the even rule.
        for (double g : grid)
          if (std::fabs(g - x) == std::fabs(want - x) && g != want && odd_mantissa(g) < odd_mantissa(want)) want = g;
        double got = quantize(x, f);
        ASSERT_EQ(got, want) << "float:" << e << ':' << m << " x=" << x;
      }
    }
  }
}

TEST(Quantize, Properties) {
  basecamp::Rng rng(3);
  std::vector<NumericFormat> formats = {parse_format("fixed:8:8"),  parse_format("fixed:4:12"),
                                        parse_format("ufixed:6:2"), parse_format("float:5:2"),
                                        parse_format("float:4:3"),  parse_format("float:8:7"),
                                        NumericFormat{}};
  for (const auto& f : formats) {
    for (int i = 0; i < 5000; ++i) {
      double x = rng.normal(0.0, 50.0);
      double y = x + std::fabs(rng.normal(0.0, 5.0));
      double qx = quantize(x, f);
      ASSERT_EQ(quantize(qx, f), qx) << to_string(f);
      ASSERT_LE(qx, quantize(y, f)) << to_string(f);
      if (f.kind == FormatKind::fixed && x >= basecamp::lowest_value(f) && x <= basecamp::max_value(f)) {
        ASSERT_LE(std::fabs(qx - x), std::ldexp(1.0, -f.frac_bits - 1)) << to_string(f);
      }
    }
  }
}

TEST(Packing, LaneCounts) {
  EXPECT_EQ(basecamp::packed_lane_count(512, NumericFormat{}), 8);
  EXPECT_EQ(basecamp::packed_lane_count(512, parse_format("fixed:8:8")), 32);
  EXPECT_EQ(basecamp::packed_lane_count(512, parse_format("float:5:2")), 64);
  EXPECT_THROW(basecamp::packed_lane_count(32, NumericFormat{}), std::invalid_argument);
}
