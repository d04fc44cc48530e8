#include "livek/core/time.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace livek {
namespace {

constexpr std::array<std::string_view, 12> kMonths = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
constexpr std::array<std::string_view, 7> kWeekdays = {
    "Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};

bool read_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::optional<TimePoint> make_time(int y, int mo, int d, int h, int mi,
                                   int s, int offset_minutes) {
  using namespace std::chrono;
  if (mo < 1 || mo > 12 || d < 1 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
      s < 0 || s > 60)
    return std::nullopt;
  year_month_day ymd{year{y} / month{static_cast<unsigned>(mo)} /
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  auto t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} -
           minutes{offset_minutes};
  return time_point_cast<seconds>(t);
}

// "+0000", "+05:30", "-0800"
bool parse_offset(std::string_view s, int& minutes) {
  if (s.size() < 3 || (s[0] != '+' && s[0] != '-')) return false;
  int sign = s[0] == '-' ? -1 : 1;
  std::string_view rest = s.substr(1);
  int hh = 0, mm = 0;
  if (rest.size() == 4) {
    if (!read_int(rest.substr(0, 2), hh) || !read_int(rest.substr(2, 2), mm))
      return false;
  } else if (rest.size() == 5 && rest[2] == ':') {
    if (!read_int(rest.substr(0, 2), hh) || !read_int(rest.substr(3, 2), mm))
      return false;
  } else if (rest.size() == 2) {
    if (!read_int(rest, hh)) return false;
  } else {
    return false;
  }
  if (hh > 23 || mm > 59) return false;
  minutes = sign * (hh * 60 + mm);
  return true;
}

bool parse_clock(std::string_view s, int& h, int& mi, int& sec) {
  return s.size() == 8 && s[2] == ':' && s[5] == ':' &&
         read_int(s.substr(0, 2), h) && read_int(s.substr(3, 2), mi) &&
         read_int(s.substr(6, 2), sec);
}

std::optional<TimePoint> parse_legacy(std::string_view s) {
  // Www Mmm dd hh:mm:ss +zzzz yyyy
  std::array<std::string_view, 6> parts;
  std::size_t n = 0, pos = 0;
  while (pos < s.size() && n < parts.size()) {
    auto next = s.find(' ', pos);
    if (next == std::string_view::npos) next = s.size();
    if (next > pos) parts[n++] = s.substr(pos, next - pos);
    pos = next + 1;
  }
  if (n != 6 || pos < s.size()) return std::nullopt;
  bool weekday_ok = false;
  for (auto w : kWeekdays) weekday_ok = weekday_ok || w == parts[0];
  if (!weekday_ok) return std::nullopt;
  int month = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i)
    if (kMonths[i] == parts[1]) month = static_cast<int>(i) + 1;
  int d = 0, h = 0, mi = 0, sec = 0, off = 0, y = 0;
  if (month == 0 || !read_int(parts[2], d) ||
      !parse_clock(parts[3], h, mi, sec) || !parse_offset(parts[4], off) ||
      !read_int(parts[5], y))
    return std::nullopt;
  return make_time(y, month, d, h, mi, sec, off);
}

std::optional<TimePoint> parse_iso(std::string_view s) {
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0, mo = 0, d = 0;
  if (!read_int(s.substr(0, 4), y) || !read_int(s.substr(5, 2), mo) ||
      !read_int(s.substr(8, 2), d))
    return std::nullopt;
  if (s.size() == 10) return make_time(y, mo, d, 0, 0, 0, 0);
  if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
  if (s.size() < 19) return std::nullopt;
  int h = 0, mi = 0, sec = 0;
  if (!parse_clock(s.substr(11, 8), h, mi, sec)) return std::nullopt;
  std::string_view rest = s.substr(19);
  if (!rest.empty() && rest[0] == '.') {
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) return std::nullopt;
    rest.remove_prefix(i);
  }
  int off = 0;
  if (rest.empty() || rest == "Z") {
    off = 0;
  } else if (!parse_offset(rest, off)) {
    return std::nullopt;
  }
  return make_time(y, mo, d, h, mi, sec, off);
}

}  // namespace

std::optional<TimePoint> parse_timestamp(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (auto legacy = parse_legacy(text)) return legacy;
  if (auto iso = parse_iso(text)) return iso;
  std::int64_t epoch = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), epoch);
  if (ec == std::errc{} && ptr == text.data() + text.size())
    return from_epoch(epoch);
  return std::nullopt;
}

namespace {

struct Civil {
  int year;
  unsigned month, day, hour, minute, second, weekday;
};

Civil to_civil(TimePoint t) {
  using namespace std::chrono;
  auto days = floor<std::chrono::days>(t);
  year_month_day ymd{days};
  hh_mm_ss<seconds> hms{t - days};
  weekday wd{days};
  return {static_cast<int>(ymd.year()),
          static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day()),
          static_cast<unsigned>(hms.hours().count()),
          static_cast<unsigned>(hms.minutes().count()),
          static_cast<unsigned>(hms.seconds().count()),
          wd.c_encoding()};
}

}  // namespace

std::string format_iso8601(TimePoint t) {
  Civil c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:%02u:%02uZ", c.year,
                c.month, c.day, c.hour, c.minute, c.second);
  return buf;
}

std::string format_legacy(TimePoint t) {
  Civil c = to_civil(t);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s %s %02u %02u:%02u:%02u +0000 %04d",
                kWeekdays[c.weekday].data(), kMonths[c.month - 1].data(),
                c.day, c.hour, c.minute, c.second, c.year);
  return buf;
}

std::string format_day(TimePoint t) {
  Civil c = to_civil(t);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

std::string format_month(TimePoint t) {
  Civil c = to_civil(t);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", c.year, c.month);
  return buf;
}

TimePoint floor_to(TimePoint t, Duration length) {
  auto n = to_epoch(t);
  auto len = length.count();
  auto q = n / len;
  if (n % len != 0 && n < 0) --q;
  return from_epoch(q * len);
}

}  // namespace livek
