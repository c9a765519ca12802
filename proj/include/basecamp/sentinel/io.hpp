#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace basecamp::sentinel {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool parse_number(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace detail

/// Series from a JSON array or single-column CSV. The first CSV row may be
/// a header; every other non-blank row must be a number.
inline std::vector<double> parse_series(const std::string& text) {
  std::string t = detail::trim(text);
  std::vector<double> out;
  if (!t.empty() && t.front() == '[') {
    try {
      for (const auto& v : nlohmann::json::parse(t)) {
        if (!v.is_number()) throw InputError("series JSON array holds a non-number");
        out.push_back(v.get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("malformed series JSON: ") + e.what());
    }
    return out;
  }
  std::istringstream in(t);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::string cell = detail::trim(line);
    if (cell.empty()) continue;
    if (cell.find(',') != std::string::npos) throw InputError("row " + std::to_string(row) + ": expected one column");
    double x;
    if (!detail::parse_number(cell, x)) {
      if (row == 1) continue;
      throw InputError("row " + std::to_string(row) + ": '" + cell + "' is not a number");
    }
    if (!std::isfinite(x)) throw InputError("row " + std::to_string(row) + ": value is not finite");
    out.push_back(x);
  }
  return out;
}

/// Label indexes separated by commas or newlines; an optional header row.
inline std::vector<std::size_t> parse_labels(const std::string& text) {
  std::vector<std::size_t> out;
  std::string cell;
  bool first = true;
  auto take = [&] {
    std::string c = detail::trim(cell);
    cell.clear();
    if (c.empty()) return;
    bool digits = true;
    for (char ch : c) digits = digits && std::isdigit(static_cast<unsigned char>(ch));
    bool header = first && !digits;
    first = false;
    if (header) return;
    if (!digits) throw InputError("label '" + c + "' is not a non-negative integer");
    out.push_back(static_cast<std::size_t>(std::stoull(c)));
  };
  for (char ch : text) {
    if (ch == ',' || ch == '\n') {
      take();
    } else {
      cell += ch;
    }
  }
  take();
  return out;
}

}  // namespace basecamp::sentinel
