#pragma once

#include <string_view>

namespace scex {

enum class ScenarioKind { cut_in, cut_out };

inline std::string_view to_string(ScenarioKind k) {
  return k == ScenarioKind::cut_in ? "cut_in" : "cut_out";
}

}  // namespace scex
