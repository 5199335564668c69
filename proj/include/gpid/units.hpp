#pragma once

#include <numbers>
#include <string_view>

namespace gpid {

// Information unit. Everything is computed in nats; reports default to bits.
enum class Unit { nats, bits };

constexpr double kLn2 = std::numbers::ln2;

constexpr double convert(double value, Unit from, Unit to) {
  if (from == to) return value;
  return from == Unit::nats ? value / kLn2 : value * kLn2;
}

constexpr std::string_view to_string(Unit u) {
  return u == Unit::bits ? "bits" : "nats";
}

Unit parse_unit(std::string_view text);

}  // namespace gpid
