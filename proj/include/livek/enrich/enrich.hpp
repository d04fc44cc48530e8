#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "livek/ingest/keywords.hpp"
#include "livek/ingest/post.hpp"
#include "livek/stream/shared_store.hpp"

namespace livek {

inline constexpr std::string_view kDeathsHospitalizations = "deaths_hospitalizations";
inline constexpr std::string_view kPositiveTests = "positive_tests";
inline constexpr std::string_view kSymptomatic = "symptomatic";

struct EnrichedPost {
  Post post;
  std::vector<std::string> matched_terms;  // topic keywords, sorted
  bool relevance = false;
  std::vector<std::string> locations;     // normalized, sorted, unique
  double sentiment = 0.0;
  std::vector<std::string> topic_groups;  // sorted
  std::vector<std::string> misinfo_terms; // sorted
  bool authoritative = false;
  // Keywords promoted while this post was processed; lets downstream jobs
  // react to promotions in stream order.
  std::vector<std::string> newly_promoted;

  // Derived from post.text; not serialized.
  std::string lowered;
  std::vector<std::string> tokens;

  void refresh_derived();
  bool has_misinfo() const { return !misinfo_terms.empty(); }
};

nlohmann::json enriched_to_json(const EnrichedPost& p);
EnrichedPost enriched_from_json(const nlohmann::json& j);

// Whitespace-collapses the text and computes relevance. Returns nullopt
// for text that is empty after normalization. Irrelevant posts are kept
// with relevance=false. With a filter, retweets inherit matches.
std::optional<EnrichedPost> clean_post(Post raw, const KeywordSet& keywords,
                                       RelevanceFilter* filter = nullptr);

class Gazetteer {
 public:
  Gazetteer() = default;
  explicit Gazetteer(const std::vector<std::string>& names);

  // Throws std::invalid_argument on empty names.
  void add(std::string_view name, std::optional<std::string> region_code = {});
  bool contains(std::string_view name) const;
  std::optional<std::string> region_code(std::string_view name) const;
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  // Names occurring in lowercased text on token boundaries, sorted.
  std::vector<std::string> lookup(std::string_view lowered) const;

  // JSON array of names or of {"name", "region"} objects.
  static Gazetteer from_json(const nlohmann::json& j);
  static Gazetteer load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::optional<std::string>, std::less<>> names_;
};

enum class LocationOrigin { extracted, authoritative };
std::string_view to_string(LocationOrigin o);

struct CacheEntry {
  std::string location;
  TimePoint last_seen{};
  LocationOrigin origin = LocationOrigin::extracted;
};

// Recently seen locations kept in the shared store. An entry matches at
// time `now` while now - last_seen <= ttl; both origins expire the same
// way. Matching against text is by substring.
class LocationCache {
 public:
  explicit LocationCache(SharedStore& store,
                         Duration ttl = std::chrono::hours(24 * 7),
                         std::string prefix = "loc:");

  // Inserts or refreshes; last_seen never moves backwards.
  void touch(std::string_view location, LocationOrigin origin, TimePoint when);
  std::optional<CacheEntry> get(std::string_view location) const;
  std::vector<CacheEntry> live_entries(TimePoint now) const;
  std::vector<std::string> match(std::string_view lowered, TimePoint now) const;
  // Drops entries that can no longer match at `now`.
  std::size_t expire(TimePoint now);

  Duration ttl() const { return ttl_; }
  std::uint64_t ignored_reports() const { return ignored_; }
  void count_ignored() { ++ignored_; }

 private:
  SharedStore& store_;
  Duration ttl_;
  std::string prefix_;
  std::uint64_t ignored_ = 0;
};

std::vector<std::string> extract_locations(std::string_view text,
                                           const Gazetteer& gazetteer,
                                           LocationCache& cache, TimePoint now);
std::vector<std::string> extract_locations_lowered(std::string_view lowered,
                                                   const Gazetteer& gazetteer,
                                                   LocationCache& cache, TimePoint now);

struct CaseReport {
  TimePoint date{};
  std::string region;
  std::int64_t new_cases = 0;
  std::string source;
};

// {date, region, new_cases, source}; throws std::invalid_argument.
CaseReport parse_case_report(const nlohmann::json& j);
std::vector<CaseReport> load_case_reports(const std::filesystem::path& path);

// False (and counted on the cache) when the region is empty.
bool absorb_authoritative_locations(const CaseReport& report, LocationCache& cache);

// term or phrase -> weight. Occurrences are counted on token boundaries.
class SentimentLexicon {
 public:
  SentimentLexicon() = default;
  explicit SentimentLexicon(std::map<std::string, double> weights);

  const std::map<std::string, double>& weights() const { return weights_; }
  double score_lowered(std::string_view lowered) const;

  static SentimentLexicon from_json(const nlohmann::json& j);
  static SentimentLexicon load(const std::filesystem::path& path);
  static SentimentLexicon defaults();

 private:
  std::map<std::string, double> weights_;
};

// Sum of weight x occurrences, clamped to [-1, 1]; 0 with no matches.
double score_sentiment(std::string_view text, const SentimentLexicon& lexicon);

// group -> terms. A group is assigned when any term occurs starting at a
// token boundary ("death" covers "deaths").
class GroupLexicons {
 public:
  GroupLexicons() = default;
  explicit GroupLexicons(std::map<std::string, std::vector<std::string>> groups);

  const std::map<std::string, std::vector<std::string>>& groups() const {
    return groups_;
  }
  std::vector<std::string> assign_lowered(std::string_view lowered) const;

  static GroupLexicons from_json(const nlohmann::json& j);
  static GroupLexicons load(const std::filesystem::path& path);
  static GroupLexicons defaults();

 private:
  std::map<std::string, std::vector<std::string>> groups_;
};

std::vector<std::string> assign_topic_groups(std::string_view text,
                                             const GroupLexicons& lexicons);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace livek
