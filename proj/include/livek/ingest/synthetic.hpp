#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "livek/ingest/post.hpp"

namespace livek {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A term that first shows up alongside seed keywords and later on its own.
struct DriftTerm {
  std::string term;
  TimePoint cooccurrence_start{};
  TimePoint solo_start{};
  double rate = 0.1;  // share of posts carrying the term while active
};

struct SyntheticConfig {
  std::uint64_t seed = 1;
  TimePoint start = from_epoch(1580515200);  // 2020-02-01
  Duration duration = std::chrono::minutes(600);
  double base_rate_per_minute = 60.0;

  std::vector<std::string> seed_terms;
  std::vector<std::string> relevant_terms;
  std::vector<std::string> irrelevant_terms;
  std::vector<std::string> misinfo_terms;
  std::vector<DriftTerm> drift_schedule;
  std::vector<std::string> region_pool;
  // Extra words mixed into posts that mention a region ("sturgis" -> rally).
  std::map<std::string, std::vector<std::string>> region_terms;
  // topic group name -> phrases that signal it
  std::map<std::string, std::vector<std::string>> topic_phrases;
  std::vector<std::pair<std::string, double>> languages;
  std::vector<std::string> authoritative_channels;
  std::size_t user_count = 500;

  double relevant_fraction = 0.2;
  double misinfo_fraction = 0.03;
  double authoritative_fraction = 0.02;
  double retweet_fraction = 0.05;
  double location_fraction = 0.4;
  double topic_fraction = 0.3;
  double iso_time_fraction = 0.1;

  // Throws ConfigError on contradictory or empty settings.
  void validate() const;

  static SyntheticConfig from_json(const nlohmann::json& j);
  // Reasonable pandemic-flavoured pools; tests start from this.
  static SyntheticConfig defaults();
};

// Labels for one generated post. Never embedded in the text.
struct GroundTruth {
  std::uint64_t id = 0;
  std::string kind;  // relevant, irrelevant, misinformation, authoritative, drift
  bool relevant = false;
  std::vector<std::string> misinfo_terms;
  std::optional<std::string> region;
  std::optional<std::string> topic_group;
  std::vector<std::string> drift_terms;
  // Text carries a drift term and no seed keyword.
  bool drift_solo = false;
  bool retweet = false;

  nlohmann::json to_json() const;
};

struct SyntheticCorpus {
  std::vector<Post> posts;
  std::vector<GroundTruth> truth;
  std::vector<bool> iso_time;  // per post: created_at written as ISO-8601

  std::vector<std::string> archive_lines() const;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

// Writes archive.jsonl and truth.jsonl into `dir`; returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> write_corpus(
    const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace livek
