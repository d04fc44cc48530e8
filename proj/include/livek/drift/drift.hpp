#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "livek/core/text.hpp"
#include "livek/core/time.hpp"
#include "livek/enrich/enrich.hpp"
#include "livek/ingest/keywords.hpp"
#include "livek/stream/shared_store.hpp"

namespace livek {

struct TermCounts {
  std::uint64_t n = 0;       // posts containing the term
  std::uint64_t n_seed = 0;  // of those, posts that also matched a seed
  bool operator==(const TermCounts&) const = default;
};

// Term / seed co-occurrence over a sliding window made of `slide`-long
// buckets. The window at time t covers the buckets whose start lies in
// (floor(t) - window_length, floor(t)].
class CooccurrenceStats {
 public:
  explicit CooccurrenceStats(Duration window_length = std::chrono::minutes(60),
                             Duration slide = std::chrono::minutes(10));

  // Moves the window so it ends at the bucket containing t. Time never
  // moves backwards; earlier t is treated as the current bucket.
  void advance_to(TimePoint t);
  // Counts one post. `candidates` must be unique.
  void observe(TimePoint t, const std::vector<std::string>& candidates,
               bool seed_match);

  std::uint64_t total() const { return total_; }
  std::uint64_t seed_posts() const { return seed_posts_; }
  TermCounts counts(std::string_view term) const;
  // Terms with n > 0, sorted.
  std::vector<std::string> terms() const;
  // Per-bucket term counts, oldest first; used for trend detection.
  std::vector<std::map<std::string, std::uint64_t>> bucket_history() const;

  std::optional<TimePoint> current_bucket() const;
  TimePoint window_start() const;
  Duration window_length() const { return window_; }
  Duration slide() const { return slide_; }

 private:
  struct Bucket {
    TimePoint start{};
    std::uint64_t total = 0;
    std::uint64_t seed_posts = 0;
    std::unordered_map<std::string, TermCounts> terms;
  };
  void evict_before(TimePoint oldest_start);

  Duration window_;
  Duration slide_;
  std::deque<Bucket> buckets_;
  std::unordered_map<std::string, TermCounts> agg_;
  std::uint64_t total_ = 0;
  std::uint64_t seed_posts_ = 0;
};

enum class Scorer { pmi, jaccard };
std::string_view to_string(Scorer s);
Scorer scorer_from_string(std::string_view s);

struct PromotionPolicy {
  std::uint64_t min_count = 25;
  double min_score = 0.7;
  Scorer scorer = Scorer::pmi;
  Duration window = std::chrono::minutes(60);
  Duration slide = std::chrono::minutes(10);
  std::size_t min_token_length = 3;
  std::vector<std::string> bigrams;  // multi-word candidates, normalized

  // Throws std::invalid_argument.
  void validate() const;
  static PromotionPolicy from_json(const nlohmann::json& j);
};

// Non-stopword tokens of at least `min_length` bytes plus the configured
// bigrams present in the text; unique, sorted.
std::vector<std::string> extract_candidates(const EnrichedPost& post,
                                            const PromotionPolicy& policy,
                                            const StopwordSet& stopwords);

// Does the text match an active seed-origin keyword?
bool matches_seed(std::string_view lowered, const KeywordSet& keywords);

void observe_post(CooccurrenceStats& stats, const EnrichedPost& post,
                  const KeywordSet& seeds, const PromotionPolicy& policy,
                  const StopwordSet& stopwords = default_stopwords());

// pmi: logistic of log(n_ts*N / (n_t*n_s)), i.e. n_ts*N / (n_ts*N + n_t*n_s).
// jaccard: n_ts / (n_t + n_s - n_ts). Zero pair count scores 0.
double score_candidate(const CooccurrenceStats& stats, std::string_view term,
                       Scorer scorer);
double score_counts(TermCounts c, std::uint64_t total, std::uint64_t seed_posts,
                    Scorer scorer);

// Adds every eligible candidate as a learned, active entry and refreshes
// the correlation of learned entries seen in the window. Candidates
// already present, or already matched by an active keyword, are skipped.
std::vector<KeywordEntry> promote_keywords(const CooccurrenceStats& stats,
                                           const PromotionPolicy& policy,
                                           KeywordSet& keywords, TimePoint now);

struct TrendingTerm {
  std::string term;
  double ratio = 0.0;
  std::uint64_t current = 0;
};

// Ranks terms by (current + 1) / (trailing mean + 1), where the last entry
// of `history` is the current window. Ties go to the lexicographically
// smaller term. Throws std::invalid_argument with fewer than 2 windows.
std::vector<TrendingTerm> detect_trending(
    const std::vector<std::map<std::string, std::uint64_t>>& history, std::size_t k);

struct PromotionAudit {
  std::string term;
  TimePoint promoted_at{};
  double score = 0.0;
  TimePoint window_start{};
  TimePoint window_end{};

  nlohmann::json to_json() const;
  static PromotionAudit from_json(const nlohmann::json& j);
};

// Keyword set as of `at`, rebuilt from seeds plus audit entries with
// promoted_at <= at.
KeywordSet keywords_at(const std::vector<std::string>& seeds, MatchMode mode,
                       const std::vector<PromotionAudit>& audit, TimePoint at);

// Stateful drift job core. Promotion is checked whenever a post opens a
// new slide bucket, before that post is counted; `now` is the bucket start.
// The keyword set is published to the store under "keywords" after each
// promotion.
class DriftAdapter {
 public:
  DriftAdapter(KeywordSet& keywords, PromotionPolicy policy,
               SharedStore* store = nullptr,
               const StopwordSet& stopwords = default_stopwords());

  // Returns terms promoted before this post was counted.
  std::vector<std::string> observe(const EnrichedPost& post);

  const CooccurrenceStats& stats() const { return stats_; }
  const std::vector<PromotionAudit>& audit() const { return audit_; }
  const PromotionPolicy& policy() const { return policy_; }
  std::uint64_t version() const { return version_; }

 private:
  void publish();

  KeywordSet& keywords_;
  PromotionPolicy policy_;
  SharedStore* store_;
  const StopwordSet& stopwords_;
  CooccurrenceStats stats_;
  std::vector<PromotionAudit> audit_;
  std::uint64_t version_ = 0;
};

}  // namespace livek
