#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace livek {

// All timestamps are UTC with one-second resolution.
using TimePoint = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

inline constexpr TimePoint from_epoch(std::int64_t seconds) {
  return TimePoint{Duration{seconds}};
}

inline constexpr std::int64_t to_epoch(TimePoint t) {
  return t.time_since_epoch().count();
}

// Accepts the legacy archive form "Sat Feb 29 18:59:56 +0000 2020",
// ISO-8601 ("2020-02-29T18:59:56Z", optional fraction and offset, or a
// space instead of 'T'), a bare date "2020-02-29", or integer epoch seconds.
std::optional<TimePoint> parse_timestamp(std::string_view text);

// "2020-02-29T18:59:56Z"
std::string format_iso8601(TimePoint t);
// "Sat Feb 29 18:59:56 +0000 2020"
std::string format_legacy(TimePoint t);
// "2020-02-29"
std::string format_day(TimePoint t);
// "2020-02"
std::string format_month(TimePoint t);

// Floor of t to a multiple of `length` since the epoch (correct for
// times before 1970 as well).
TimePoint floor_to(TimePoint t, Duration length);

}  // namespace livek
