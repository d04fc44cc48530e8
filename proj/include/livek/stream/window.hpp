#pragma once

#include <compare>
#include <stdexcept>

#include "livek/core/time.hpp"

namespace livek {

inline constexpr Duration kDefaultWindowLength{60};

struct WindowAssignment {
  TimePoint window_start{};
  Duration window_length = kDefaultWindowLength;

  TimePoint window_end() const { return window_start + window_length; }
  bool contains(TimePoint t) const {
    return t >= window_start && t < window_end();
  }
  auto operator<=>(const WindowAssignment&) const = default;
};

// window_start = floor(event_time / length) * length. A timestamp on a
// boundary belongs to the window that starts there.
inline WindowAssignment assign_window(TimePoint event_time,
                                      Duration length = kDefaultWindowLength) {
  if (length <= Duration::zero())
    throw std::invalid_argument("window length must be positive");
  return {floor_to(event_time, length), length};
}

}  // namespace livek
