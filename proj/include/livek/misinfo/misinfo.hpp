#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "livek/drift/drift.hpp"
#include "livek/enrich/enrich.hpp"
#include "livek/ingest/keywords.hpp"
#include "livek/stream/shared_store.hpp"
#include "livek/stream/window.hpp"

namespace livek {

// Misinformation keywords. Append-only within a run; tombstoned terms stop
// matching and are never re-added.
class MisinfoKeywordSet {
 public:
  explicit MisinfoKeywordSet(MatchMode mode = MatchMode::substring) : set_(mode) {}
  // Seeded with "bioweapon" and "plandemic".
  static MisinfoKeywordSet with_defaults(TimePoint now = {});

  bool add(std::string_view term, TimePoint now);
  void tombstone(std::string_view term);
  bool is_tombstoned(std::string_view term) const;

  bool contains(std::string_view term) const;
  std::vector<std::string> active_terms() const { return set_.active_terms(); }
  std::vector<std::string> match(std::string_view lowered) const {
    return set_.match(lowered);
  }
  std::size_t size() const { return set_.size(); }
  const KeywordSet& keywords() const { return set_; }

  std::map<std::string, TimePoint>& source_versions() { return versions_; }
  const std::map<std::string, TimePoint>& source_versions() const { return versions_; }

  nlohmann::json to_json() const;
  static MisinfoKeywordSet from_json(const nlohmann::json& j);

 private:
  KeywordSet set_;
  std::set<std::string> tombstones_;
  std::map<std::string, TimePoint> versions_;
};

enum class SourceFormat { terms_json, sectioned };

struct MisinfoSource {
  std::string name;
  std::filesystem::path path;
  SourceFormat format = SourceFormat::terms_json;
  // Sectioned documents: headlines are read from sections whose title
  // contains one of these (case-insensitive).
  std::vector<std::string> sections{"conspiracy"};

  static MisinfoSource from_json(const nlohmann::json& j,
                                 const std::filesystem::path& base = {});
};

struct ExtractResult {
  std::vector<std::string> terms;  // in document order, unique
  std::size_t missing_sections = 0;
};

// Reads "== Section ==" / "=== Headline ===" markup. Each headline in a
// wanted section becomes one normalized phrase with generic words such as
// "conspiracy" or "theory" removed.
ExtractResult extract_misinfo_terms(std::string_view document,
                                    const std::vector<std::string>& sections);
std::string headline_to_term(std::string_view headline);

struct RefreshResult {
  std::vector<std::string> added;
  std::size_t skipped_sources = 0;
  std::size_t missing_sections = 0;
};

// Unreadable sources are skipped and counted; the set keeps what it had.
RefreshResult refresh_misinfo_keywords(const std::vector<MisinfoSource>& sources,
                                       MisinfoKeywordSet& set, TimePoint now);

class AuthoritativeSourceList {
 public:
  AuthoritativeSourceList() = default;
  explicit AuthoritativeSourceList(const std::vector<std::string>& names);

  bool matches(std::string_view channel) const;
  bool empty() const { return names_.empty(); }
  const std::set<std::string>& names() const { return names_; }

  // Array of names or {"sources": [...]}; throws std::invalid_argument
  // when empty.
  static AuthoritativeSourceList from_json(const nlohmann::json& j);
  static AuthoritativeSourceList load(const std::filesystem::path& path);

 private:
  std::set<std::string> names_;
};

void tag_authoritative(EnrichedPost& post, const AuthoritativeSourceList& list);

struct WindowTagReport {
  WindowAssignment window;
  std::uint64_t posts_in = 0;
  // Posts carrying misinformation terms, authoritative posts excluded.
  std::uint64_t tagged = 0;
  std::map<std::string, std::uint64_t> term_counts;

  // "term:count;..." for the `n` most frequent terms.
  std::string top_terms(std::size_t n = 5) const;
  static std::string csv_header() { return "window_start,posts_in,tagged,top_terms"; }
  std::string csv_row() const;
};

// Sets misinfo_terms on every post. Authoritative posts keep their terms
// but are left out of the counts.
WindowTagReport tag_misinformation_window(std::vector<EnrichedPost>& posts,
                                          const MisinfoKeywordSet& set,
                                          const WindowAssignment& window);

struct PiggybackCandidate {
  std::string term;
  double score = 0.0;
  TimePoint detected_at{};
};

// Trending terms that co-occur with existing misinformation terms. `stats`
// counts posts, with "seed" meaning the post matched the misinformation set.
std::vector<PiggybackCandidate> detect_piggyback(
    const std::vector<TrendingTerm>& trending, const MisinfoKeywordSet& set,
    const CooccurrenceStats& stats, double min_score = 0.7,
    std::uint64_t min_count = 5);

// Window tagging with a cached view of the set published in the store
// under "misinfo:keywords"; the view is reloaded when the version changes.
class MisinfoTagger {
 public:
  explicit MisinfoTagger(MisinfoKeywordSet initial, SharedStore* store = nullptr);

  WindowTagReport tag(std::vector<EnrichedPost>& posts, const WindowAssignment& w);
  const MisinfoKeywordSet& view() const { return view_; }
  std::uint64_t reloads() const { return reloads_; }

  static void publish(SharedStore& store, const MisinfoKeywordSet& set);

 private:
  void refresh_view();

  MisinfoKeywordSet view_;
  SharedStore* store_;
  std::string version_;
  std::uint64_t reloads_ = 0;
};

// Tracks co-occurrence with misinformation terms per slide bucket and
// reports new piggyback candidates at each bucket boundary. Terms already
// seen as topic keyword matches are skipped. Candidates are only logged.
class PiggybackDetector {
 public:
  PiggybackDetector(Duration window = std::chrono::minutes(60),
                    Duration slide = std::chrono::minutes(10), std::size_t top_k = 20,
                    double min_score = 0.7, std::uint64_t min_count = 5);

  std::vector<PiggybackCandidate> observe(const EnrichedPost& post,
                                          const MisinfoKeywordSet& set);
  const std::vector<PiggybackCandidate>& log() const { return log_; }

 private:
  CooccurrenceStats stats_;
  PromotionPolicy candidates_;
  std::size_t top_k_;
  double min_score_;
  std::uint64_t min_count_;
  std::set<std::string> seen_;
  std::set<std::string> topic_terms_;
  std::vector<PiggybackCandidate> log_;
};

}  // namespace livek
