#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "livek/core/time.hpp"
#include "livek/enrich/enrich.hpp"

namespace livek {

enum class Dimension { month, language, region_day, topic_region_day };
std::string_view to_string(Dimension d);

using CountTable = std::map<std::string, std::uint64_t>;

// Key of one post under a dimension. Every post gets exactly one key, so
// table totals equal the number of posts: multiple regions or groups are
// joined with '+', missing ones become "unknown" / "none".
std::string bucket_key(const EnrichedPost& post, Dimension d);
CountTable bucket_counts(const std::vector<EnrichedPost>& posts, Dimension d);

// Collects every table in one pass; used by the pipeline so posts need
// not be kept.
class CountAccumulator {
 public:
  void add(const EnrichedPost& post);
  const CountTable& table(Dimension d) const { return tables_[static_cast<int>(d)]; }
  std::uint64_t total() const { return total_; }
  // Relevant posts per region per day, one count per mentioned region.
  const std::map<std::string, std::map<TimePoint, double>>& social_daily() const {
    return social_;
  }

 private:
  CountTable tables_[4];
  std::uint64_t total_ = 0;
  std::map<std::string, std::map<TimePoint, double>> social_;
};

enum class Granularity { minute, day, month };

struct TimeSeries {
  std::string region;
  Granularity granularity = Granularity::day;
  std::vector<std::pair<TimePoint, double>> points;  // strictly increasing

  // Throws std::invalid_argument on unsorted buckets or negative counts.
  void validate() const;
  static TimeSeries daily(std::string region, const std::map<TimePoint, double>& counts);
};

// nullopt for fewer than two points or zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationResult {
  std::string region;
  int best_lag = 0;  // days; positive when the social series leads
  double r = 0.0;
  std::size_t n = 0;
  bool defined = false;
  std::string reason;  // why the result is undefined

  nlohmann::json to_json() const;
};

// Pearson r of social[d] against cases[d + lag] for each lag in
// [-max_lag, max_lag]; missing days count as 0. The best lag has the
// largest r, ties going to the smaller |lag|.
CorrelationResult lagged_correlation(const TimeSeries& social, const TimeSeries& cases,
                                     int max_lag = 21);

struct LanguageRow {
  std::string language;
  std::uint64_t count = 0;
  double pct = 0.0;  // floored to one decimal
};
// Sorted by count descending, then language.
std::vector<LanguageRow> language_rows(const CountTable& languages);

std::string month_csv(const CountTable& months);
std::string language_csv(const CountTable& languages);
std::string table_csv(const CountTable& table, const std::string& key_header);
std::string correlation_jsonl(const std::vector<CorrelationResult>& results);

struct ReportBundle {
  CountTable months;
  CountTable languages;
  CountTable region_day;
  CountTable topic_region_day;
  std::vector<CorrelationResult> correlations;
};

ReportBundle make_report(const CountAccumulator& acc,
                         const std::vector<CaseReport>& cases, int max_lag = 21);

// Writes months.csv, languages.csv, region_day.csv, topic_region_day.csv
// and correlation.jsonl. Throws std::runtime_error on write failure.
std::vector<std::filesystem::path> emit_report(const ReportBundle& bundle,
                                               const std::filesystem::path& dir);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace livek
