#include "livek/ebka/ebka.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "livek/core/text.hpp"
#include "livek/drift/drift.hpp"

namespace livek {

std::string_view to_string(ClusterStatus s) {
  switch (s) {
    case ClusterStatus::tentative: return "tentative";
    case ClusterStatus::corroborated: return "corroborated";
    case ClusterStatus::refuted: return "refuted";
  }
  return "tentative";
}

ClusterStatus cluster_status_from_string(std::string_view s) {
  if (s == "tentative") return ClusterStatus::tentative;
  if (s == "corroborated") return ClusterStatus::corroborated;
  if (s == "refuted") return ClusterStatus::refuted;
  throw std::invalid_argument("unknown cluster status '" + std::string(s) + "'");
}

std::string cluster_id(std::string_view location, TimePoint window_start) {
  return std::string(location) + "/" + format_iso8601(window_start);
}

nlohmann::json EventCluster::to_json() const {
  return {{"id", id},
          {"location", location},
          {"window",
           {{"start", format_iso8601(window.window_start)},
            {"end", format_iso8601(window.window_end())}}},
          {"size", post_ids.size()},
          {"status", to_string(status)},
          {"team_score", team_score},
          {"evidence_ids", evidence_ids},
          {"topic_terms", topic_terms}};
}

ClusterBuilder::ClusterBuilder(Duration window, std::size_t min_size,
                               std::size_t topic_term_limit)
    : window_(window), min_size_(min_size), topic_limit_(topic_term_limit) {
  if (window_ <= Duration::zero()) throw std::invalid_argument("cluster window must be positive");
  if (min_size_ == 0) throw std::invalid_argument("min_cluster_size must be >= 1");
}

bool ClusterBuilder::add(const EnrichedPost& post) {
  if (post.locations.empty()) return false;
  if (post.has_misinfo() && !post.authoritative) return false;
  auto start = floor_to(post.post.created_at, window_);
  const auto& stop = default_stopwords();
  std::vector<std::string> terms;
  terms.reserve(post.tokens.size());
  for (const auto& t : post.tokens)
    if (t.size() >= 3 && !stop.count(t)) terms.push_back(t);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  for (const auto& loc : post.locations) {
    auto& g = groups_[{start, loc}];
    g.ids.push_back(post.post.id);
    g.channels.insert(to_lower_ascii(post.post.channel));
    g.sentiment_sum += post.sentiment;
    g.extremity_sum += std::abs(post.sentiment);
    for (const auto& t : terms) ++g.doc_freq[t];
  }
  return true;
}

EventCluster ClusterBuilder::close(const std::pair<TimePoint, std::string>& key,
                                   Group& g) const {
  EventCluster c;
  c.location = key.second;
  c.window = {key.first, window_};
  c.id = cluster_id(c.location, key.first);
  std::sort(g.ids.begin(), g.ids.end());
  g.ids.erase(std::unique(g.ids.begin(), g.ids.end()), g.ids.end());
  c.post_ids = g.ids;
  std::vector<std::pair<std::string, std::size_t>> df(g.doc_freq.begin(), g.doc_freq.end());
  std::stable_sort(df.begin(), df.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (df.size() > topic_limit_) df.resize(topic_limit_);
  for (auto& [t, _] : df) c.topic_terms.push_back(t);
  std::sort(c.topic_terms.begin(), c.topic_terms.end());
  const double n = static_cast<double>(c.post_ids.size());
  c.features.size = c.post_ids.size();
  c.features.mean_sentiment = g.sentiment_sum / n;
  c.features.sentiment_extremity = std::min(1.0, g.extremity_sum / n);
  c.features.source_diversity = static_cast<double>(g.channels.size()) / n;
  return c;
}

std::vector<EventCluster> ClusterBuilder::flush(TimePoint watermark) {
  std::vector<EventCluster> out;
  for (auto it = groups_.begin(); it != groups_.end();) {
    if (it->first.first + window_ + window_ > watermark) {
      ++it;
      continue;
    }
    if (it->second.ids.size() >= min_size_) out.push_back(close(it->first, it->second));
    it = groups_.erase(it);
  }
  return out;
}

std::vector<EventCluster> ClusterBuilder::flush_all() {
  std::vector<EventCluster> out;
  for (auto& [key, g] : groups_)
    if (g.ids.size() >= min_size_) out.push_back(close(key, g));
  groups_.clear();
  return out;
}

std::vector<EventCluster> form_clusters(const std::vector<EnrichedPost>& posts,
                                        Duration window, std::size_t min_size) {
  ClusterBuilder b(window, min_size);
  for (const auto& p : posts) b.add(p);
  return b.flush_all();
}

std::string_view to_string(EvidenceKind k) {
  return k == EvidenceKind::contradicting ? "contradicting" : "supporting";
}

EvidenceKind evidence_kind_from_string(std::string_view s) {
  if (s == "supporting") return EvidenceKind::supporting;
  if (s == "contradicting") return EvidenceKind::contradicting;
  throw std::invalid_argument("unknown evidence kind '" + std::string(s) + "'");
}

nlohmann::json Evidence::to_json() const {
  return {{"id", id},
          {"kind", to_string(kind)},
          {"source", source},
          {"location", location},
          {"time", format_iso8601(time)},
          {"terms", terms},
          {"arrived_at", format_iso8601(arrived_at)}};
}

Evidence Evidence::from_json(const nlohmann::json& j, std::size_t fallback_index) {
  auto ts = [](const nlohmann::json& v) {
    std::optional<TimePoint> t;
    if (v.is_string()) t = parse_timestamp(v.get<std::string>());
    else if (v.is_number_integer()) t = from_epoch(v.get<std::int64_t>());
    if (!t) throw std::invalid_argument("evidence: bad timestamp");
    return *t;
  };
  Evidence ev;
  try {
    ev.id = j.contains("id") ? j.at("id").get<std::string>()
                             : "ev-" + std::to_string(fallback_index);
    ev.kind = evidence_kind_from_string(j.at("kind").get<std::string>());
    ev.source = j.at("source").get<std::string>();
    ev.location = normalize_term(j.at("location").get<std::string>());
    ev.time = ts(j.at("time"));
    for (const auto& t : j.value("terms", std::vector<std::string>{}))
      ev.terms.push_back(normalize_term(t));
    ev.arrived_at = j.contains("arrived_at") ? ts(j.at("arrived_at")) : ev.time;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("evidence: ") + e.what());
  }
  if (ev.location.empty()) throw std::invalid_argument("evidence: empty location");
  return ev;
}

std::vector<Evidence> load_evidence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open evidence feed " + path.string());
  std::vector<Evidence> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (collapse_whitespace(line).empty()) continue;
    try {
      out.push_back(Evidence::from_json(nlohmann::json::parse(line), out.size()));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return out;
}

bool EvidenceStore::add(Evidence ev) {
  auto id = ev.id;
  return items_.emplace(std::move(id), std::move(ev)).second;
}

const Evidence* EvidenceStore::find(std::string_view id) const {
  auto it = items_.find(id);
  return it == items_.end() ? nullptr : &it->second;
}

std::vector<const Evidence*> EvidenceStore::all() const {
  std::vector<const Evidence*> out;
  for (const auto& [_, e] : items_) out.push_back(&e);
  return out;
}

bool MatchRule::matches(const EventCluster& c, const Evidence& ev) const {
  if (normalize_term(ev.location) != c.location) return false;
  Duration gap{0};
  if (ev.time < c.window.window_start) gap = c.window.window_start - ev.time;
  else if (ev.time > c.window.window_end()) gap = ev.time - c.window.window_end();
  if (gap > lag_tolerance) return false;
  std::size_t overlap = 0;
  for (const auto& t : ev.terms)
    if (std::binary_search(c.topic_terms.begin(), c.topic_terms.end(), t)) ++overlap;
  return overlap >= min_term_overlap;
}

AttachResult attach_evidence(EventCluster& cluster, const Evidence& ev,
                             const MatchRule& rule) {
  if (!rule.matches(cluster, ev)) return AttachResult::no_match;
  return cluster.evidence_ids.insert(ev.id).second ? AttachResult::attached
                                                   : AttachResult::already_attached;
}

ClusterStatus resolve_status(const EventCluster& cluster, const EvidenceStore& store) {
  long net = 0;
  for (const auto& id : cluster.evidence_ids)
    if (const auto* ev = store.find(id))
      net += ev->kind == EvidenceKind::supporting ? 1 : -1;
  if (net >= 1) return ClusterStatus::corroborated;
  if (net <= -1) return ClusterStatus::refuted;
  return ClusterStatus::tentative;
}

KeywordPresenceMember::KeywordPresenceMember(std::string id, std::vector<std::string> terms)
    : id_(std::move(id)) {
  for (const auto& t : terms) {
    auto key = normalize_term(t);
    if (!key.empty()) terms_.push_back(std::move(key));
  }
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
}

double KeywordPresenceMember::score(const EventCluster& c) const {
  for (const auto& t : terms_)
    if (std::binary_search(c.topic_terms.begin(), c.topic_terms.end(), t)) return 1.0;
  return 0.0;
}

double SizePercentileMember::score(const EventCluster& c) const {
  return std::clamp(c.features.size_percentile, 0.0, 1.0);
}

double SentimentExtremityMember::score(const EventCluster& c) const {
  return std::clamp(c.features.sentiment_extremity, 0.0, 1.0);
}

double SourceDiversityMember::score(const EventCluster& c) const {
  return std::clamp(c.features.source_diversity, 0.0, 1.0);
}

TeamedClassifier::TeamedClassifier(double eta) : eta_(eta) {
  if (!(eta_ > 0)) throw std::invalid_argument("learning rate must be positive");
}

void TeamedClassifier::add_member(std::shared_ptr<const Member> member) {
  if (!member) throw std::invalid_argument("null team member");
  const double m = static_cast<double>(members_.size());
  auto w = weights();
  for (std::size_t i = 0; i < w.size(); ++i) log_w_[i] = std::log(w[i] * m / (m + 1.0));
  members_.push_back(std::move(member));
  log_w_.push_back(std::log(1.0 / (m + 1.0)));
}

std::vector<double> TeamedClassifier::weights() const {
  std::vector<double> w(log_w_.size());
  if (w.empty()) return w;
  double hi = *std::max_element(log_w_.begin(), log_w_.end());
  double sum = 0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += (w[i] = std::exp(log_w_[i] - hi));
  for (auto& x : w) x /= sum;
  return w;
}

double TeamedClassifier::unnormalized_weight(std::size_t i) const {
  return std::exp(log_w_.at(i));
}

std::vector<double> TeamedClassifier::votes(const EventCluster& c) const {
  std::vector<double> v;
  v.reserve(members_.size());
  for (const auto& m : members_) v.push_back(std::clamp(m->score(c), 0.0, 1.0));
  return v;
}

double TeamedClassifier::predict(const EventCluster& c) const {
  if (members_.empty()) throw std::logic_error("team has no members");
  auto w = weights();
  auto v = votes(c);
  double s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * v[i];
  return std::clamp(s, 0.0, 1.0);
}

std::vector<double> TeamedClassifier::update_weights(const std::vector<double>& votes,
                                                     int outcome) {
  if (votes.size() != members_.size())
    throw std::invalid_argument("one vote per member required");
  if (outcome != 1 && outcome != -1) throw std::invalid_argument("outcome must be +1 or -1");
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i] < 0 || votes[i] > 1) throw std::invalid_argument("votes must lie in [0,1]");
    log_w_[i] += eta_ * outcome * (2.0 * votes[i] - 1.0);
  }
  return weights();
}

TeamedClassifier TeamedClassifier::with_default_members(
    const std::vector<std::string>& event_terms, double eta) {
  TeamedClassifier t(eta);
  t.add_member(std::make_shared<KeywordPresenceMember>("keyword_presence", event_terms));
  t.add_member(std::make_shared<SizePercentileMember>());
  t.add_member(std::make_shared<SentimentExtremityMember>());
  t.add_member(std::make_shared<SourceDiversityMember>());
  return t;
}

double team_predict(const TeamedClassifier& team, const EventCluster& c) {
  return team.predict(c);
}

void add_trend_member(TeamedClassifier& team, const std::vector<EnrichedPost>& trend_posts,
                      std::size_t top_terms) {
  if (trend_posts.empty()) throw std::invalid_argument("trend has no posts");
  std::map<std::string, std::size_t> df;
  PromotionPolicy policy;
  for (const auto& p : trend_posts)
    for (const auto& t : extract_candidates(p, policy, default_stopwords())) ++df[t];
  std::vector<std::pair<std::string, std::size_t>> v(df.begin(), df.end());
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (v.size() > top_terms) v.resize(top_terms);
  std::vector<std::string> terms;
  for (auto& [t, _] : v) terms.push_back(t);
  auto id = "trend:" + join(terms, "+");
  team.add_member(std::make_shared<KeywordPresenceMember>(id, terms));
}

CorroborationEngine::CorroborationEngine(TeamedClassifier team, MatchRule rule,
                                         std::optional<AuthoritativeSourceList> sources)
    : team_(std::move(team)), rule_(rule), sources_(std::move(sources)) {}

std::vector<StatusChange> CorroborationEngine::apply(EventCluster& c, const Evidence& ev) {
  std::vector<StatusChange> changes;
  if (attach_evidence(c, ev, rule_) != AttachResult::attached) return changes;
  auto next = resolve_status(c, evidence_);
  if (next == c.status) return changes;
  changes.push_back({c.id, c.status, next, ev.id});
  c.status = next;
  team_.update_weights(team_.votes(c), ev.kind == EvidenceKind::supporting ? 1 : -1);
  return changes;
}

std::vector<StatusChange> CorroborationEngine::add_cluster(EventCluster cluster) {
  if (cluster.post_ids.empty()) throw std::invalid_argument("cluster has no posts");
  if (index_.count(cluster.id)) throw std::invalid_argument("duplicate cluster " + cluster.id);
  auto size = cluster.post_ids.size();
  sizes_sorted_.insert(std::upper_bound(sizes_sorted_.begin(), sizes_sorted_.end(), size),
                       size);
  auto le = std::upper_bound(sizes_sorted_.begin(), sizes_sorted_.end(), size) -
            sizes_sorted_.begin();
  cluster.features.size = size;
  cluster.features.size_percentile =
      static_cast<double>(le) / static_cast<double>(sizes_sorted_.size());
  cluster.status = ClusterStatus::tentative;
  cluster.evidence_ids.clear();
  cluster.team_score = team_.predict(cluster);
  index_[cluster.id] = clusters_.size();
  clusters_.push_back(std::move(cluster));
  std::vector<StatusChange> changes;
  auto& c = clusters_.back();
  for (const auto* ev : evidence_.all()) {
    auto ch = apply(c, *ev);
    changes.insert(changes.end(), ch.begin(), ch.end());
  }
  log_.insert(log_.end(), changes.begin(), changes.end());
  return changes;
}

std::vector<StatusChange> CorroborationEngine::ingest_evidence(const Evidence& ev) {
  std::vector<StatusChange> changes;
  if (sources_ && !sources_->matches(ev.source)) {
    ++rejected_;
    return changes;
  }
  if (!evidence_.add(ev)) return changes;
  for (auto& c : clusters_) {
    auto ch = apply(c, ev);
    changes.insert(changes.end(), ch.begin(), ch.end());
  }
  log_.insert(log_.end(), changes.begin(), changes.end());
  return changes;
}

const EventCluster* CorroborationEngine::find(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &clusters_[it->second];
}

void CorroborationEngine::rescore() {
  for (auto& c : clusters_) c.team_score = team_.predict(c);
}

nlohmann::json CorroborationEngine::export_clusters() const {
  auto arr = nlohmann::json::array();
  for (const auto& c : clusters_) arr.push_back(c.to_json());
  return arr;
}

std::string CorroborationEngine::change_log_csv() const {
  std::string out = change_log_header() + "\n";
  for (const auto& ch : log_)
    out += ch.cluster_id + "," + std::string(to_string(ch.old_status)) + "," +
           std::string(to_string(ch.new_status)) + "," + ch.evidence_id + "\n";
  return out;
}

std::vector<StatusChange> retroactive_correct(CorroborationEngine& engine,
                                              const Evidence& ev) {
  return engine.ingest_evidence(ev);
}

}  // namespace livek
