#include "livek/ingest/post.hpp"

#include <charconv>

#include "livek/core/text.hpp"

namespace livek {

std::string_view to_string(Rejection r) {
  switch (r) {
    case Rejection::empty: return "empty";
    case Rejection::malformed: return "malformed";
    case Rejection::missing_field: return "missing_field";
    case Rejection::bad_id: return "bad_id";
    case Rejection::bad_timestamp: return "bad_timestamp";
    case Rejection::invalid_utf8: return "invalid_utf8";
  }
  return "unknown";
}

namespace {

std::optional<std::uint64_t> read_id(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    auto i = v.get<std::int64_t>();
    if (i < 0) return std::nullopt;
    return static_cast<std::uint64_t>(i);
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  return std::nullopt;
}

}  // namespace

ParseResult parse_post(std::string_view line) {
  auto first = line.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return Rejection::empty;
  if (!is_valid_utf8(line)) return Rejection::invalid_utf8;

  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return Rejection::malformed;

  auto id_it = j.find("id");
  auto text_it = j.find("text");
  auto time_it = j.find("created_at");
  if (id_it == j.end() || text_it == j.end() || time_it == j.end() ||
      id_it->is_null() || text_it->is_null() || time_it->is_null())
    return Rejection::missing_field;
  if (!text_it->is_string()) return Rejection::malformed;

  Post post;
  auto id = read_id(*id_it);
  if (!id) return Rejection::bad_id;
  post.id = *id;

  std::optional<TimePoint> created;
  if (time_it->is_string())
    created = parse_timestamp(time_it->get_ref<const std::string&>());
  else if (time_it->is_number_integer())
    created = from_epoch(time_it->get<std::int64_t>());
  if (!created) return Rejection::bad_timestamp;
  post.created_at = *created;

  post.text = text_it->get<std::string>();
  if (auto it = j.find("lang"); it != j.end() && it->is_string())
    post.lang = it->get<std::string>();
  if (auto it = j.find("channel"); it != j.end() && it->is_string()) {
    post.channel = it->get<std::string>();
  } else if (auto u = j.find("user"); u != j.end() && u->is_object()) {
    if (auto sn = u->find("screen_name"); sn != u->end() && sn->is_string())
      post.channel = sn->get<std::string>();
  }
  if (auto it = j.find("retweeted_id"); it != j.end() && !it->is_null()) {
    auto rt = read_id(*it);
    if (!rt) return Rejection::bad_id;
    post.is_retweet_of = *rt;
  }
  return post;
}

nlohmann::json post_to_json(const Post& post) {
  nlohmann::json j;
  j["created_at"] = format_iso8601(post.created_at);
  j["id"] = post.id;
  j["text"] = post.text;
  if (!post.lang.empty()) j["lang"] = post.lang;
  if (!post.channel.empty()) j["channel"] = post.channel;
  if (post.is_retweet_of) j["retweeted_id"] = *post.is_retweet_of;
  return j;
}

std::string to_archive_line(const Post& post, bool iso_time) {
  auto j = post_to_json(post);
  if (!iso_time) j["created_at"] = format_legacy(post.created_at);
  return j.dump();
}

}  // namespace livek
