#include "livek/drift/drift.hpp"

#include <algorithm>
#include <stdexcept>

namespace livek {

CooccurrenceStats::CooccurrenceStats(Duration window_length, Duration slide)
    : window_(window_length), slide_(slide) {
  if (slide_ <= Duration::zero() || window_ < slide_ || window_ % slide_ != Duration::zero())
    throw std::invalid_argument(
        "window length must be a positive multiple of the slide interval");
}

void CooccurrenceStats::evict_before(TimePoint oldest_start) {
  while (!buckets_.empty() && buckets_.front().start < oldest_start) {
    auto& b = buckets_.front();
    total_ -= b.total;
    seed_posts_ -= b.seed_posts;
    for (const auto& [term, c] : b.terms) {
      auto it = agg_.find(term);
      it->second.n -= c.n;
      it->second.n_seed -= c.n_seed;
      if (it->second.n == 0) agg_.erase(it);
    }
    buckets_.pop_front();
  }
}

void CooccurrenceStats::advance_to(TimePoint t) {
  auto start = floor_to(t, slide_);
  if (!buckets_.empty() && start <= buckets_.back().start) return;
  evict_before(start - window_ + slide_);
  Bucket b;
  b.start = start;
  buckets_.push_back(std::move(b));
}

void CooccurrenceStats::observe(TimePoint t, const std::vector<std::string>& candidates,
                                bool seed_match) {
  advance_to(t);
  auto& b = buckets_.back();
  ++b.total;
  ++total_;
  if (seed_match) {
    ++b.seed_posts;
    ++seed_posts_;
  }
  for (const auto& term : candidates) {
    auto& bc = b.terms[term];
    auto& ac = agg_[term];
    ++bc.n;
    ++ac.n;
    if (seed_match) {
      ++bc.n_seed;
      ++ac.n_seed;
    }
  }
}

TermCounts CooccurrenceStats::counts(std::string_view term) const {
  auto it = agg_.find(std::string(term));
  return it == agg_.end() ? TermCounts{} : it->second;
}

std::vector<std::string> CooccurrenceStats::terms() const {
  std::vector<std::string> out;
  out.reserve(agg_.size());
  for (const auto& [t, _] : agg_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::map<std::string, std::uint64_t>> CooccurrenceStats::bucket_history()
    const {
  std::vector<std::map<std::string, std::uint64_t>> out;
  for (const auto& b : buckets_) {
    std::map<std::string, std::uint64_t> m;
    for (const auto& [t, c] : b.terms) m[t] = c.n;
    out.push_back(std::move(m));
  }
  return out;
}

std::optional<TimePoint> CooccurrenceStats::current_bucket() const {
  if (buckets_.empty()) return std::nullopt;
  return buckets_.back().start;
}

TimePoint CooccurrenceStats::window_start() const {
  if (buckets_.empty()) return {};
  return buckets_.back().start - window_ + slide_;
}

std::string_view to_string(Scorer s) { return s == Scorer::jaccard ? "jaccard" : "pmi"; }

Scorer scorer_from_string(std::string_view s) {
  if (s == "pmi") return Scorer::pmi;
  if (s == "jaccard") return Scorer::jaccard;
  throw std::invalid_argument("unknown scorer '" + std::string(s) + "'");
}

void PromotionPolicy::validate() const {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  if (!(min_score > 0)) throw std::invalid_argument("min_score must be > 0");
  if (slide <= Duration::zero() || window < slide || window % slide != Duration::zero())
    throw std::invalid_argument("window must be a positive multiple of slide");
}

PromotionPolicy PromotionPolicy::from_json(const nlohmann::json& j) {
  PromotionPolicy p;
  try {
    p.min_count = j.value("min_count", p.min_count);
    p.min_score = j.value("min_score", p.min_score);
    if (j.contains("scorer")) p.scorer = scorer_from_string(j.at("scorer").get<std::string>());
    if (j.contains("window_minutes"))
      p.window = std::chrono::minutes(j.at("window_minutes").get<std::int64_t>());
    if (j.contains("slide_minutes"))
      p.slide = std::chrono::minutes(j.at("slide_minutes").get<std::int64_t>());
    p.min_token_length = j.value("min_token_length", p.min_token_length);
    if (j.contains("bigrams"))
      for (const auto& b : j.at("bigrams").get<std::vector<std::string>>())
        p.bigrams.push_back(normalize_term(b));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("promotion policy: ") + e.what());
  }
  p.validate();
  return p;
}

std::vector<std::string> extract_candidates(const EnrichedPost& post,
                                            const PromotionPolicy& policy,
                                            const StopwordSet& stopwords) {
  std::vector<std::string> out;
  out.reserve(post.tokens.size());
  for (const auto& t : post.tokens)
    if (t.size() >= policy.min_token_length && !stopwords.count(t)) out.push_back(t);
  for (const auto& b : policy.bigrams)
    if (contains_word(post.lowered, b)) out.push_back(b);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool matches_seed(std::string_view lowered, const KeywordSet& keywords) {
  for (const auto* e : keywords.entries())
    if (e->origin == KeywordOrigin::seed && e->active &&
        term_matches(lowered, e->term, keywords.match_mode()))
      return true;
  return false;
}

void observe_post(CooccurrenceStats& stats, const EnrichedPost& post,
                  const KeywordSet& seeds, const PromotionPolicy& policy,
                  const StopwordSet& stopwords) {
  stats.observe(post.post.created_at, extract_candidates(post, policy, stopwords),
                matches_seed(post.lowered, seeds));
}

double score_counts(TermCounts c, std::uint64_t total, std::uint64_t seed_posts,
                    Scorer scorer) {
  if (c.n_seed == 0 || c.n == 0) return 0.0;
  const double nts = static_cast<double>(c.n_seed);
  const double nt = static_cast<double>(c.n);
  const double ns = static_cast<double>(seed_posts);
  if (scorer == Scorer::jaccard) return nts / (nt + ns - nts);
  const double a = nts * static_cast<double>(total);
  return a / (a + nt * ns);
}

double score_candidate(const CooccurrenceStats& stats, std::string_view term,
                       Scorer scorer) {
  return score_counts(stats.counts(term), stats.total(), stats.seed_posts(), scorer);
}

std::vector<KeywordEntry> promote_keywords(const CooccurrenceStats& stats,
                                           const PromotionPolicy& policy,
                                           KeywordSet& keywords, TimePoint now) {
  std::vector<KeywordEntry> promoted;
  for (const auto& term : stats.terms()) {
    auto c = stats.counts(term);
    double score = score_counts(c, stats.total(), stats.seed_posts(), policy.scorer);
    if (const auto* existing = keywords.find(term)) {
      if (existing->origin == KeywordOrigin::learned) keywords.set_correlation(term, score);
      continue;
    }
    if (c.n < policy.min_count || score < policy.min_score) continue;
    if (!keywords.match(term).empty()) continue;
    KeywordEntry e;
    e.term = term;
    e.origin = KeywordOrigin::learned;
    e.first_seen = stats.window_start();
    e.promoted_at = now;
    e.correlation = score;
    e.active = true;
    if (keywords.insert(e)) promoted.push_back(std::move(e));
  }
  return promoted;
}

std::vector<TrendingTerm> detect_trending(
    const std::vector<std::map<std::string, std::uint64_t>>& history, std::size_t k) {
  if (history.size() < 2)
    throw std::invalid_argument("trend detection needs at least two windows");
  std::map<std::string, std::uint64_t> trailing_sum;
  for (std::size_t i = 0; i + 1 < history.size(); ++i)
    for (const auto& [t, n] : history[i]) trailing_sum[t] += n;
  const auto& current = history.back();
  for (const auto& [t, _] : current) trailing_sum.try_emplace(t, 0);
  const double prior = static_cast<double>(history.size() - 1);
  std::vector<TrendingTerm> out;
  out.reserve(trailing_sum.size());
  for (const auto& [t, sum] : trailing_sum) {
    auto it = current.find(t);
    std::uint64_t cur = it == current.end() ? 0 : it->second;
    double mean = static_cast<double>(sum) / prior;
    out.push_back({t, (static_cast<double>(cur) + 1.0) / (mean + 1.0), cur});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.ratio > b.ratio;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

nlohmann::json PromotionAudit::to_json() const {
  return {{"term", term},
          {"promoted_at", format_iso8601(promoted_at)},
          {"score", score},
          {"window", {{"start", format_iso8601(window_start)},
                      {"end", format_iso8601(window_end)}}}};
}

PromotionAudit PromotionAudit::from_json(const nlohmann::json& j) {
  auto ts = [](const nlohmann::json& v) {
    auto t = parse_timestamp(v.get<std::string>());
    if (!t) throw std::invalid_argument("audit entry: bad timestamp");
    return *t;
  };
  PromotionAudit a;
  a.term = j.at("term").get<std::string>();
  a.promoted_at = ts(j.at("promoted_at"));
  a.score = j.value("score", 0.0);
  if (j.contains("window")) {
    a.window_start = ts(j.at("window").at("start"));
    a.window_end = ts(j.at("window").at("end"));
  }
  return a;
}

KeywordSet keywords_at(const std::vector<std::string>& seeds, MatchMode mode,
                       const std::vector<PromotionAudit>& audit, TimePoint at) {
  auto set = KeywordSet::with_seeds(seeds, mode);
  for (const auto& a : audit) {
    if (a.promoted_at > at) continue;
    KeywordEntry e;
    e.term = a.term;
    e.origin = KeywordOrigin::learned;
    e.first_seen = a.window_start;
    e.promoted_at = a.promoted_at;
    e.correlation = a.score;
    set.insert(std::move(e));
  }
  return set;
}

DriftAdapter::DriftAdapter(KeywordSet& keywords, PromotionPolicy policy,
                           SharedStore* store, const StopwordSet& stopwords)
    : keywords_(keywords),
      policy_(std::move(policy)),
      store_(store),
      stopwords_(stopwords),
      stats_(policy_.window, policy_.slide) {
  policy_.validate();
  publish();
}

std::vector<std::string> DriftAdapter::observe(const EnrichedPost& post) {
  std::vector<std::string> promoted_terms;
  auto bucket = floor_to(post.post.created_at, policy_.slide);
  auto current = stats_.current_bucket();
  if (current && bucket > *current) {
    auto promoted = promote_keywords(stats_, policy_, keywords_, bucket);
    for (auto& e : promoted) {
      audit_.push_back({e.term, bucket, e.correlation, stats_.window_start(),
                        *current + policy_.slide});
      promoted_terms.push_back(e.term);
    }
    if (!promoted.empty()) publish();
  }
  observe_post(stats_, post, keywords_, policy_, stopwords_);
  return promoted_terms;
}

void DriftAdapter::publish() {
  ++version_;
  if (!store_) return;
  store_->put("keywords", keywords_.to_json().dump());
  store_->put("keywords:version", std::to_string(version_));
}

}  // namespace livek
