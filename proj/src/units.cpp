#include "chipgate/units.hpp"

#include <charconv>
#include <string>
#include <utility>

#include "chipgate/error.hpp"

namespace chipgate::units {

namespace {

constexpr std::pair<std::string_view, double> kUnits[] = {
    {"T", 1.0},       {"mT", 1e-3},     {"uT", 1e-6},     {"G", 1e-4},
    {"mG", 1e-7},     {"m", 1.0},       {"cm", 1e-2},     {"mm", 1e-3},
    {"um", 1e-6},     {"nm", 1e-9},     {"A", 1.0},       {"mA", 1e-3},
    {"uA", 1e-6},     {"s", 1.0},       {"ms", 1e-3},     {"us", 1e-6},
    {"ns", 1e-9},     {"Hz", 1.0},      {"kHz", 1e3},     {"MHz", 1e6},
    {"GHz", 1e9},     {"kg", 1.0},      {"J", 1.0},       {"rad", 1.0},
    {"1/m", 1.0},     {"1/cm", 1e2},    {"rad/s", 1.0},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

double unit_scale(std::string_view unit) {
  unit = trim(unit);
  if (unit.empty()) return 1.0;
  for (const auto& [name, scale] : kUnits) {
    if (name == unit) return scale;
  }
  throw ConfigError("unknown unit '" + std::string(unit) + "'");
}

Quantity split_quantity(std::string_view text) {
  const auto s = trim(text);
  double value = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr == first) {
    throw ConfigError("malformed quantity '" + std::string(text) + "'");
  }
  return {value, trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr)))};
}

double parse_quantity(std::string_view text) {
  const auto q = split_quantity(text);
  return q.number * unit_scale(q.unit);
}

}  // namespace chipgate::units
