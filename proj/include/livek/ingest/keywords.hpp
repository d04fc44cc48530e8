#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "livek/core/time.hpp"
#include "livek/ingest/post.hpp"
#include "livek/stream/shared_store.hpp"

namespace livek {

enum class KeywordOrigin { seed, learned, misinfo, authoritative };
enum class MatchMode { substring, token };

std::string_view to_string(KeywordOrigin o);
KeywordOrigin keyword_origin_from_string(std::string_view s);
std::string_view to_string(MatchMode m);
MatchMode match_mode_from_string(std::string_view s);

struct KeywordEntry {
  std::string term;  // normalized: lowercase, single spaces
  KeywordOrigin origin = KeywordOrigin::seed;
  TimePoint first_seen{};
  std::optional<TimePoint> promoted_at;
  double correlation = 0.0;
  bool active = true;

  bool operator==(const KeywordEntry&) const = default;
};

// Tracked topic keywords. Seed entries can never be removed or
// deactivated; matching is case-insensitive.
class KeywordSet {
 public:
  explicit KeywordSet(MatchMode mode = MatchMode::substring) : mode_(mode) {}

  static KeywordSet with_seeds(const std::vector<std::string>& terms,
                               MatchMode mode = MatchMode::substring,
                               TimePoint first_seen = {});

  // False when the (normalized) term is already present or empty.
  bool insert(KeywordEntry entry);
  bool contains(std::string_view term) const;
  const KeywordEntry* find(std::string_view term) const;
  bool set_correlation(std::string_view term, double value);
  // Refused (false) for seed entries.
  bool deactivate(std::string_view term);

  MatchMode match_mode() const { return mode_; }
  std::size_t size() const { return entries_.size(); }
  // Sorted by term.
  std::vector<const KeywordEntry*> entries() const;
  std::vector<std::string> active_terms() const;
  // Active entries occurring in already-lowercased text, sorted by term.
  std::vector<std::string> match(std::string_view lowered_text) const;

  nlohmann::json to_json() const;
  static KeywordSet from_json(const nlohmann::json& j);

 private:
  MatchMode mode_;
  std::map<std::string, KeywordEntry, std::less<>> entries_;
};

// Does `term` occur in already-lowercased `text` under `mode`?
bool term_matches(std::string_view lowered_text, std::string_view term,
                  MatchMode mode);

// Active entries occurring in the text, sorted by term.
std::vector<std::string> match_keywords_lowered(std::string_view lowered_text,
                                                const KeywordSet& keywords);
std::vector<std::string> match_keywords(const Post& post,
                                        const KeywordSet& keywords);

// Keyword matching plus retweet closure: a retweet of a recently matched
// post inherits that post's matched terms. Recent matches live in the
// shared store under `prefix` with a TTL measured on the store clock.
class RelevanceFilter {
 public:
  explicit RelevanceFilter(SharedStore& store,
                           Duration retweet_ttl = std::chrono::hours(24),
                           std::string prefix = "rt:");

  std::vector<std::string> match(const Post& post, std::string_view lowered,
                                 const KeywordSet& keywords);

 private:
  SharedStore& store_;
  Duration ttl_;
  std::string prefix_;
  std::uint64_t puts_ = 0;
};

}  // namespace livek
