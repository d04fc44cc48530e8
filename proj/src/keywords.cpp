#include "livek/ingest/keywords.hpp"

#include <stdexcept>

#include "livek/core/text.hpp"

namespace livek {

std::string_view to_string(KeywordOrigin o) {
  switch (o) {
    case KeywordOrigin::seed: return "seed";
    case KeywordOrigin::learned: return "learned";
    case KeywordOrigin::misinfo: return "misinfo";
    case KeywordOrigin::authoritative: return "authoritative";
  }
  return "seed";
}

KeywordOrigin keyword_origin_from_string(std::string_view s) {
  if (s == "seed") return KeywordOrigin::seed;
  if (s == "learned") return KeywordOrigin::learned;
  if (s == "misinfo") return KeywordOrigin::misinfo;
  if (s == "authoritative") return KeywordOrigin::authoritative;
  throw std::invalid_argument("unknown keyword origin '" + std::string(s) + "'");
}

std::string_view to_string(MatchMode m) {
  return m == MatchMode::token ? "token" : "substring";
}

MatchMode match_mode_from_string(std::string_view s) {
  if (s == "substring") return MatchMode::substring;
  if (s == "token") return MatchMode::token;
  throw std::invalid_argument("unknown match mode '" + std::string(s) + "'");
}

KeywordSet KeywordSet::with_seeds(const std::vector<std::string>& terms,
                                  MatchMode mode, TimePoint first_seen) {
  KeywordSet set(mode);
  for (const auto& t : terms) {
    KeywordEntry e;
    e.term = t;
    e.origin = KeywordOrigin::seed;
    e.first_seen = first_seen;
    set.insert(std::move(e));
  }
  return set;
}

bool KeywordSet::insert(KeywordEntry entry) {
  entry.term = normalize_term(entry.term);
  if (entry.term.empty() || entries_.count(entry.term)) return false;
  if (entry.origin == KeywordOrigin::seed) entry.active = true;
  auto key = entry.term;
  entries_.emplace(std::move(key), std::move(entry));
  return true;
}

bool KeywordSet::contains(std::string_view term) const {
  return find(term) != nullptr;
}

const KeywordEntry* KeywordSet::find(std::string_view term) const {
  auto it = entries_.find(normalize_term(term));
  return it == entries_.end() ? nullptr : &it->second;
}

bool KeywordSet::set_correlation(std::string_view term, double value) {
  auto it = entries_.find(normalize_term(term));
  if (it == entries_.end()) return false;
  it->second.correlation = value;
  return true;
}

bool KeywordSet::deactivate(std::string_view term) {
  auto it = entries_.find(normalize_term(term));
  if (it == entries_.end() || it->second.origin == KeywordOrigin::seed)
    return false;
  it->second.active = false;
  return true;
}

std::vector<const KeywordEntry*> KeywordSet::entries() const {
  std::vector<const KeywordEntry*> out;
  out.reserve(entries_.size());
  for (const auto& [_, e] : entries_) out.push_back(&e);
  return out;
}

std::vector<std::string> KeywordSet::active_terms() const {
  std::vector<std::string> out;
  for (const auto& [t, e] : entries_)
    if (e.active) out.push_back(t);
  return out;
}

nlohmann::json KeywordSet::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [t, e] : entries_) {
    nlohmann::json je = {{"term", e.term},
                         {"origin", to_string(e.origin)},
                         {"first_seen", to_epoch(e.first_seen)},
                         {"correlation", e.correlation},
                         {"active", e.active}};
    je["promoted_at"] = e.promoted_at ? nlohmann::json(to_epoch(*e.promoted_at))
                                      : nlohmann::json(nullptr);
    entries.push_back(std::move(je));
  }
  return {{"match_mode", to_string(mode_)}, {"entries", std::move(entries)}};
}

KeywordSet KeywordSet::from_json(const nlohmann::json& j) {
  KeywordSet set(match_mode_from_string(j.value("match_mode", "substring")));
  for (const auto& je : j.at("entries")) {
    KeywordEntry e;
    e.term = je.at("term").get<std::string>();
    e.origin = keyword_origin_from_string(je.value("origin", "seed"));
    e.first_seen = from_epoch(je.value("first_seen", std::int64_t{0}));
    if (je.contains("promoted_at") && !je.at("promoted_at").is_null())
      e.promoted_at = from_epoch(je.at("promoted_at").get<std::int64_t>());
    e.correlation = je.value("correlation", 0.0);
    e.active = je.value("active", true);
    set.insert(std::move(e));
  }
  return set;
}

bool term_matches(std::string_view lowered_text, std::string_view term,
                  MatchMode mode) {
  if (mode == MatchMode::substring)
    return lowered_text.find(term) != std::string_view::npos;
  return contains_word(lowered_text, term);
}

std::vector<std::string> KeywordSet::match(std::string_view lowered_text) const {
  std::vector<std::string> out;
  for (const auto& [term, e] : entries_)
    if (e.active && term_matches(lowered_text, term, mode_)) out.push_back(term);
  return out;
}

std::vector<std::string> match_keywords_lowered(std::string_view lowered_text,
                                                const KeywordSet& keywords) {
  return keywords.match(lowered_text);
}

std::vector<std::string> match_keywords(const Post& post,
                                        const KeywordSet& keywords) {
  return match_keywords_lowered(to_lower_ascii(post.text), keywords);
}

RelevanceFilter::RelevanceFilter(SharedStore& store, Duration retweet_ttl,
                                 std::string prefix)
    : store_(store), ttl_(retweet_ttl), prefix_(std::move(prefix)) {}

std::vector<std::string> RelevanceFilter::match(const Post& post,
                                                std::string_view lowered,
                                                const KeywordSet& keywords) {
  auto matched = match_keywords_lowered(lowered, keywords);
  if (matched.empty() && post.is_retweet_of) {
    if (auto inherited = store_.get(prefix_ + std::to_string(*post.is_retweet_of))) {
      auto j = nlohmann::json::parse(*inherited);
      matched = j.get<std::vector<std::string>>();
    }
  }
  if (!matched.empty()) {
    store_.put(prefix_ + std::to_string(post.id), nlohmann::json(matched).dump(),
               ttl_);
    // Bound the recent-id set.
    if (++puts_ % 4096 == 0) store_.purge_expired();
  }
  return matched;
}

}  // namespace livek
