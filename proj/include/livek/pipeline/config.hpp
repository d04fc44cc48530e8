#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "livek/core/time.hpp"
#include "livek/drift/drift.hpp"
#include "livek/ebka/ebka.hpp"
#include "livek/ingest/archive.hpp"
#include "livek/ingest/keywords.hpp"
#include "livek/ingest/synthetic.hpp"
#include "livek/misinfo/misinfo.hpp"
#include "livek/stream/job.hpp"

namespace livek {

// Field-level validation problems, e.g. "archive: file not found: x".
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct LinkSpec {
  std::string name;
  std::string kind = "queue";  // queue | log
  std::size_t capacity = 1024;
  std::filesystem::path path;  // log links
  bool sync = false;           // log links: fdatasync per append
};

struct TopologySpec {
  std::vector<LinkSpec> links;
  std::vector<JobSpec> jobs;

  static TopologySpec from_json(const nlohmann::json& j,
                                const std::filesystem::path& base = {});
};

struct PipelineConfig {
  std::filesystem::path config_dir;
  std::optional<std::uint64_t> seed;

  std::filesystem::path archive;
  std::optional<SyntheticConfig> synthetic;  // generated when no archive is set
  std::filesystem::path out_dir = "out";
  ReplaySpeed speed;
  std::optional<TimePoint> until;

  std::vector<std::string> seed_keywords;
  MatchMode match_mode = MatchMode::substring;
  Duration retweet_ttl = std::chrono::hours(24);

  bool drift_enabled = true;
  PromotionPolicy promotion;

  std::filesystem::path gazetteer;
  std::filesystem::path sentiment_lexicon;  // empty: built-in
  std::filesystem::path topic_groups;       // empty: built-in
  Duration location_ttl = std::chrono::hours(24 * 7);
  std::filesystem::path case_reports;       // optional

  std::vector<MisinfoSource> misinfo_sources;
  std::vector<std::string> misinfo_seed_terms{"bioweapon", "plandemic"};
  std::vector<std::string> misinfo_tombstones;
  std::vector<std::string> misinfo_confirmed;  // piggyback terms accepted upfront
  Duration misinfo_window = std::chrono::seconds(60);
  double piggyback_min_score = 0.7;
  std::uint64_t piggyback_min_count = 5;
  std::size_t piggyback_top_k = 20;

  std::filesystem::path authoritative_sources;

  std::filesystem::path evidence;  // optional
  Duration cluster_window = std::chrono::minutes(60);
  std::size_t min_cluster_size = 3;
  double eta = 0.5;
  MatchRule match_rule;
  std::vector<std::string> event_terms;
  std::size_t trend_member_terms = 5;

  int max_lag_days = 21;
  bool write_enriched = true;

  TopologySpec topology;

  nlohmann::json raw;  // merged document after env overrides

  // Parses and validates; relative paths are resolved against `base`.
  // Throws ValidationError listing every problem found.
  static PipelineConfig from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base);
  static PipelineConfig load(const std::filesystem::path& path);
};

// Overrides scalar leaves from the environment: the leaf drift.min_count
// is read from LIVEK_DRIFT_MIN_COUNT. Values are parsed to the leaf's type;
// null leaves take the string. Returns the names applied.
std::vector<std::string> apply_env_overrides(nlohmann::json& doc,
                                             const std::string& prefix = "LIVEK");

// Default eight-job topology over in-memory queues.
nlohmann::json default_topology_json();

}  // namespace livek
