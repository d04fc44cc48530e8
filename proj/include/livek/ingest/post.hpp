#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "livek/core/time.hpp"

namespace livek {

struct Post {
  std::uint64_t id = 0;
  TimePoint created_at{};
  std::string text;
  std::string lang;
  std::string channel;
  std::optional<std::uint64_t> is_retweet_of;

  bool operator==(const Post&) const = default;
};

enum class Rejection {
  empty,
  malformed,
  missing_field,
  bad_id,
  bad_timestamp,
  invalid_utf8,
};

std::string_view to_string(Rejection r);

using ParseResult = std::variant<Post, Rejection>;

// One archive line: a JSON object with created_at, id, text and optional
// lang, channel (or user.screen_name) and retweeted_id.
ParseResult parse_post(std::string_view line);

// Inverse of parse_post; created_at is written in the legacy form unless
// `iso_time` is set.
std::string to_archive_line(const Post& post, bool iso_time = false);

nlohmann::json post_to_json(const Post& post);

}  // namespace livek
