#pragma once

#include <compare>
#include <functional>
#include <string>

namespace ddnet {

using CountryId = std::string;
using VariableId = std::string;

// One column of a panel: a (unit, variable) pair. Common series such as an
// oil price use an empty unit.
struct SeriesId {
  CountryId unit;
  VariableId variable;

  auto operator<=>(const SeriesId&) const = default;
  bool operator==(const SeriesId&) const = default;

  std::string str() const { return unit.empty() ? variable : unit + ":" + variable; }
  static SeriesId parse(const std::string& s) {
    auto pos = s.find(':');
    if (pos == std::string::npos) return {"", s};
    return {s.substr(0, pos), s.substr(pos + 1)};
  }
};

}  // namespace ddnet

template <>
struct std::hash<ddnet::SeriesId> {
  std::size_t operator()(const ddnet::SeriesId& s) const noexcept {
    return std::hash<std::string>{}(s.unit) * 31u ^ std::hash<std::string>{}(s.variable);
  }
};
