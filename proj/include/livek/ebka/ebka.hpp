#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "livek/enrich/enrich.hpp"
#include "livek/misinfo/misinfo.hpp"
#include "livek/stream/window.hpp"

namespace livek {

enum class ClusterStatus { tentative, corroborated, refuted };
std::string_view to_string(ClusterStatus s);
ClusterStatus cluster_status_from_string(std::string_view s);

struct ClusterFeatures {
  std::size_t size = 0;
  double mean_sentiment = 0.0;
  double sentiment_extremity = 0.0;  // mean |sentiment|
  double source_diversity = 0.0;     // distinct channels / size
  double size_percentile = 0.0;      // set when the cluster is stored
};

struct EventCluster {
  std::string id;  // "<location>/<window start ISO>"
  std::string location;
  WindowAssignment window;
  std::vector<std::uint64_t> post_ids;  // sorted
  std::vector<std::string> topic_terms; // sorted
  ClusterStatus status = ClusterStatus::tentative;
  std::set<std::string> evidence_ids;
  double team_score = 0.0;
  ClusterFeatures features;

  nlohmann::json to_json() const;
};

std::string cluster_id(std::string_view location, TimePoint window_start);

// Groups posts by (location, window). Misinformation-tagged posts that are
// not authoritative, and posts without locations, are skipped. A post with
// k locations joins k clusters.
class ClusterBuilder {
 public:
  explicit ClusterBuilder(Duration window = std::chrono::minutes(60),
                          std::size_t min_size = 3, std::size_t topic_term_limit = 25);

  // False when the post was skipped.
  bool add(const EnrichedPost& post);
  // Closes groups whose window ended at least one window length before
  // `watermark`; groups below min_size are dropped. Sorted by window, then
  // location.
  std::vector<EventCluster> flush(TimePoint watermark);
  std::vector<EventCluster> flush_all();
  std::size_t open_groups() const { return groups_.size(); }

 private:
  struct Group {
    std::vector<std::uint64_t> ids;
    std::set<std::string> channels;
    double sentiment_sum = 0.0;
    double extremity_sum = 0.0;
    std::map<std::string, std::size_t> doc_freq;
  };
  EventCluster close(const std::pair<TimePoint, std::string>& key, Group& g) const;

  Duration window_;
  std::size_t min_size_;
  std::size_t topic_limit_;
  std::map<std::pair<TimePoint, std::string>, Group> groups_;
};

std::vector<EventCluster> form_clusters(const std::vector<EnrichedPost>& posts,
                                        Duration window = std::chrono::minutes(60),
                                        std::size_t min_size = 3);

enum class EvidenceKind { supporting, contradicting };
std::string_view to_string(EvidenceKind k);
EvidenceKind evidence_kind_from_string(std::string_view s);

struct Evidence {
  std::string id;
  EvidenceKind kind = EvidenceKind::supporting;
  std::string source;
  std::string location;  // normalized
  TimePoint time{};
  std::vector<std::string> terms;  // normalized
  TimePoint arrived_at{};

  nlohmann::json to_json() const;
  // {id?, kind, source, location, time, terms, arrived_at?}; a missing id
  // becomes "ev-<fallback_index>", a missing arrived_at equals time.
  static Evidence from_json(const nlohmann::json& j, std::size_t fallback_index = 0);
};

std::vector<Evidence> load_evidence(const std::filesystem::path& path);

class EvidenceStore {
 public:
  // False for a duplicate id.
  bool add(Evidence ev);
  const Evidence* find(std::string_view id) const;
  std::size_t size() const { return items_.size(); }
  std::vector<const Evidence*> all() const;

 private:
  std::map<std::string, Evidence, std::less<>> items_;
};

struct MatchRule {
  Duration lag_tolerance = std::chrono::hours(24 * 14);
  std::size_t min_term_overlap = 1;

  // Same normalized location, evidence time within lag_tolerance of the
  // cluster window, and enough shared terms.
  bool matches(const EventCluster& c, const Evidence& ev) const;
};

enum class AttachResult { attached, already_attached, no_match };

AttachResult attach_evidence(EventCluster& cluster, const Evidence& ev,
                             const MatchRule& rule);

// Net evidence: supporting - contradicting >= 1 corroborates, <= -1 refutes.
ClusterStatus resolve_status(const EventCluster& cluster, const EvidenceStore& store);

// Team member: maps a cluster to a vote in [0, 1].
class Member {
 public:
  virtual ~Member() = default;
  virtual std::string id() const = 0;
  virtual double score(const EventCluster& c) const = 0;
};

class KeywordPresenceMember : public Member {
 public:
  KeywordPresenceMember(std::string id, std::vector<std::string> terms);
  std::string id() const override { return id_; }
  // 1 when any term is among the cluster's topic terms.
  double score(const EventCluster& c) const override;
  const std::vector<std::string>& terms() const { return terms_; }

 private:
  std::string id_;
  std::vector<std::string> terms_;
};

class SizePercentileMember : public Member {
 public:
  std::string id() const override { return "size_percentile"; }
  double score(const EventCluster& c) const override;
};

class SentimentExtremityMember : public Member {
 public:
  std::string id() const override { return "sentiment_extremity"; }
  double score(const EventCluster& c) const override;
};

class SourceDiversityMember : public Member {
 public:
  std::string id() const override { return "source_diversity"; }
  double score(const EventCluster& c) const override;
};

// Weighted team with multiplicative updates
//   w_i <- w_i * exp(eta * outcome * (2 v_i - 1))
// Weights are kept as logs; unnormalized_weight() exposes the running
// product since the last membership change.
class TeamedClassifier {
 public:
  explicit TeamedClassifier(double eta = 0.5);

  // The first member gets weight 1; member m+1 joins at 1/(m+1) with the
  // others scaled to fill the rest.
  void add_member(std::shared_ptr<const Member> member);

  std::size_t size() const { return members_.size(); }
  const Member& member(std::size_t i) const { return *members_.at(i); }
  double eta() const { return eta_; }
  std::vector<double> weights() const;
  double unnormalized_weight(std::size_t i) const;

  std::vector<double> votes(const EventCluster& c) const;
  double predict(const EventCluster& c) const;
  std::vector<double> update_weights(const std::vector<double>& votes, int outcome);

  static TeamedClassifier with_default_members(
      const std::vector<std::string>& event_terms, double eta = 0.5);

 private:
  double eta_;
  std::vector<std::shared_ptr<const Member>> members_;
  std::vector<double> log_w_;
};

double team_predict(const TeamedClassifier& team, const EventCluster& c);

// Keyword-presence member over the most frequent candidate terms of
// `trend_posts`. Throws std::invalid_argument when the list is empty.
void add_trend_member(TeamedClassifier& team, const std::vector<EnrichedPost>& trend_posts,
                      std::size_t top_terms = 5);

struct StatusChange {
  std::string cluster_id;
  ClusterStatus old_status;
  ClusterStatus new_status;
  std::string evidence_id;
};

// Single-writer store of clusters and evidence. Every status flip is logged
// and triggers a weight update with the flipping evidence's sign.
class CorroborationEngine {
 public:
  CorroborationEngine(TeamedClassifier team, MatchRule rule = {},
                      std::optional<AuthoritativeSourceList> sources = std::nullopt);

  // Stores the cluster, attaches matching stored evidence. Returns changes.
  std::vector<StatusChange> add_cluster(EventCluster cluster);
  // Returns the changes caused by this evidence; evidence from a source not
  // on the list is rejected and counted.
  std::vector<StatusChange> ingest_evidence(const Evidence& ev);

  const std::vector<EventCluster>& clusters() const { return clusters_; }
  const EventCluster* find(std::string_view id) const;
  const std::vector<StatusChange>& change_log() const { return log_; }
  const EvidenceStore& evidence() const { return evidence_; }
  TeamedClassifier& team() { return team_; }
  const TeamedClassifier& team() const { return team_; }
  std::uint64_t rejected_evidence() const { return rejected_; }

  // Recomputes team scores with the current weights.
  void rescore();

  nlohmann::json export_clusters() const;
  static std::string change_log_header() {
    return "cluster_id,old_status,new_status,evidence_id";
  }
  std::string change_log_csv() const;

 private:
  std::vector<StatusChange> apply(EventCluster& c, const Evidence& ev);

  TeamedClassifier team_;
  MatchRule rule_;
  std::optional<AuthoritativeSourceList> sources_;
  EvidenceStore evidence_;
  std::vector<EventCluster> clusters_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::size_t> sizes_sorted_;
  std::vector<StatusChange> log_;
  std::uint64_t rejected_ = 0;
};

// Attaches `ev` to every matching cluster, re-resolves, updates weights per
// flip; returns the change log entries.
std::vector<StatusChange> retroactive_correct(CorroborationEngine& engine,
                                              const Evidence& ev);

}  // namespace livek
