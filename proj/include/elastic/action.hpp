#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace elastic {

// Ternary scaling decision. The underlying value is the numeric encoding used
// by the resource-adjustment sum.
enum class ActionChoice : std::int8_t { ScaleDown = -1, Hold = 0, ScaleUp = 1 };

inline constexpr std::array<ActionChoice, 3> kAllActions{ActionChoice::ScaleDown, ActionChoice::Hold,
                                                         ActionChoice::ScaleUp};
inline constexpr int kNumActions = 3;

constexpr int to_numeric(ActionChoice a) noexcept { return static_cast<int>(a); }

// Position in logits / one-hot vectors: ScaleDown=0, Hold=1, ScaleUp=2.
constexpr int action_index(ActionChoice a) noexcept { return static_cast<int>(a) + 1; }

constexpr ActionChoice action_from_index(int index) noexcept {
  return static_cast<ActionChoice>(index - 1);
}

constexpr std::string_view action_name(ActionChoice a) noexcept {
  switch (a) {
    case ActionChoice::ScaleDown: return "scale_down";
    case ActionChoice::Hold: return "hold";
    case ActionChoice::ScaleUp: return "scale_up";
  }
  return "?";
}

}  // namespace elastic
