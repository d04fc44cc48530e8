#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "livek/core/time.hpp"

namespace livek {

// Envelope passed between ingest, process and emit primitives.
template <typename Payload>
struct StreamRecord {
  Payload payload{};
  std::optional<std::string> key;
  TimePoint event_time{};
  TimePoint ingest_time{};
  std::uint64_t offset = 0;  // assigned by the log or the producing source
};

using JsonRecord = StreamRecord<nlohmann::json>;

// Wire form of a JsonRecord body; the offset is implied by position.
inline std::string encode_record(const JsonRecord& r) {
  nlohmann::json j;
  j["p"] = r.payload;
  j["k"] = r.key ? nlohmann::json(*r.key) : nlohmann::json(nullptr);
  j["e"] = to_epoch(r.event_time);
  j["i"] = to_epoch(r.ingest_time);
  return j.dump();
}

inline JsonRecord decode_record(std::string_view bytes, std::uint64_t offset) {
  auto j = nlohmann::json::parse(bytes);
  JsonRecord r;
  r.payload = std::move(j.at("p"));
  if (!j.at("k").is_null()) r.key = j.at("k").get<std::string>();
  r.event_time = from_epoch(j.at("e").get<std::int64_t>());
  r.ingest_time = from_epoch(j.at("i").get<std::int64_t>());
  r.offset = offset;
  return r;
}

}  // namespace livek
