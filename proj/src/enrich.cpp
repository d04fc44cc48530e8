#include "livek/enrich/enrich.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "livek/core/text.hpp"

namespace livek {

void EnrichedPost::refresh_derived() {
  lowered = to_lower_ascii(post.text);
  tokens = tokenize(lowered);
}

nlohmann::json enriched_to_json(const EnrichedPost& p) {
  nlohmann::json j = post_to_json(p.post);
  j["matched_terms"] = p.matched_terms;
  j["relevance"] = p.relevance;
  j["locations"] = p.locations;
  j["sentiment"] = p.sentiment;
  j["topic_groups"] = p.topic_groups;
  j["misinfo_terms"] = p.misinfo_terms;
  j["authoritative"] = p.authoritative;
  if (!p.newly_promoted.empty()) j["newly_promoted"] = p.newly_promoted;
  return j;
}

EnrichedPost enriched_from_json(const nlohmann::json& j) {
  auto parsed = parse_post(j.dump());
  if (auto* r = std::get_if<Rejection>(&parsed))
    throw std::invalid_argument("enriched post: " + std::string(to_string(*r)));
  EnrichedPost p;
  p.post = std::get<Post>(std::move(parsed));
  auto list = [&](const char* k) {
    return j.contains(k) ? j.at(k).get<std::vector<std::string>>()
                         : std::vector<std::string>{};
  };
  p.matched_terms = list("matched_terms");
  p.relevance = j.value("relevance", false);
  p.locations = list("locations");
  p.sentiment = j.value("sentiment", 0.0);
  p.topic_groups = list("topic_groups");
  p.misinfo_terms = list("misinfo_terms");
  p.authoritative = j.value("authoritative", false);
  p.newly_promoted = list("newly_promoted");
  p.refresh_derived();
  return p;
}

std::optional<EnrichedPost> clean_post(Post raw, const KeywordSet& keywords,
                                       RelevanceFilter* filter) {
  raw.text = collapse_whitespace(raw.text);
  if (raw.text.empty()) return std::nullopt;
  EnrichedPost p;
  p.post = std::move(raw);
  p.refresh_derived();
  p.matched_terms = filter ? filter->match(p.post, p.lowered, keywords)
                           : keywords.match(p.lowered);
  p.relevance = !p.matched_terms.empty();
  return p;
}

Gazetteer::Gazetteer(const std::vector<std::string>& names) {
  for (const auto& n : names) add(n);
}

void Gazetteer::add(std::string_view name, std::optional<std::string> region_code) {
  auto key = normalize_term(name);
  if (key.empty()) throw std::invalid_argument("gazetteer name is empty");
  names_[key] = std::move(region_code);
}

bool Gazetteer::contains(std::string_view name) const {
  return names_.find(normalize_term(name)) != names_.end();
}

std::optional<std::string> Gazetteer::region_code(std::string_view name) const {
  auto it = names_.find(normalize_term(name));
  return it == names_.end() ? std::nullopt : it->second;
}

std::vector<std::string> Gazetteer::lookup(std::string_view lowered) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : names_)
    if (contains_word(lowered, name)) out.push_back(name);
  return out;
}

Gazetteer Gazetteer::from_json(const nlohmann::json& j) {
  Gazetteer g;
  for (const auto& e : j) {
    if (e.is_string()) {
      g.add(e.get<std::string>());
    } else {
      std::optional<std::string> code;
      if (e.contains("region") && !e.at("region").is_null())
        code = e.at("region").get<std::string>();
      g.add(e.at("name").get<std::string>(), std::move(code));
    }
  }
  return g;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

std::string_view to_string(LocationOrigin o) {
  return o == LocationOrigin::authoritative ? "authoritative" : "extracted";
}

namespace {

// Stored value: "<epoch> <a|e>"
std::string encode_entry(TimePoint when, LocationOrigin origin) {
  return std::to_string(to_epoch(when)) +
         (origin == LocationOrigin::authoritative ? " a" : " e");
}

CacheEntry decode_entry(std::string_view location, std::string_view value) {
  CacheEntry e;
  e.location = std::string(location);
  std::int64_t epoch = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), epoch);
  if (ec != std::errc{}) throw std::runtime_error("corrupt location cache entry");
  e.last_seen = from_epoch(epoch);
  e.origin = (ptr + 1 < value.data() + value.size() && ptr[1] == 'a')
                 ? LocationOrigin::authoritative
                 : LocationOrigin::extracted;
  return e;
}

}  // namespace

LocationCache::LocationCache(SharedStore& store, Duration ttl, std::string prefix)
    : store_(store), ttl_(ttl), prefix_(std::move(prefix)) {}

void LocationCache::touch(std::string_view location, LocationOrigin origin,
                          TimePoint when) {
  auto key = normalize_term(location);
  if (key.empty()) return;
  store_.update(prefix_ + key, [&](const std::optional<std::string>& cur) {
    TimePoint last = when;
    if (cur) last = std::max(last, decode_entry(key, *cur).last_seen);
    return std::optional<std::string>(encode_entry(last, origin));
  });
}

std::optional<CacheEntry> LocationCache::get(std::string_view location) const {
  auto key = normalize_term(location);
  auto v = store_.get(prefix_ + key);
  if (!v) return std::nullopt;
  return decode_entry(key, *v);
}

std::vector<CacheEntry> LocationCache::live_entries(TimePoint now) const {
  std::vector<CacheEntry> out;
  for (const auto& [k, v] : store_.scan_prefix(prefix_)) {
    auto e = decode_entry(std::string_view(k).substr(prefix_.size()), v);
    if (now - e.last_seen <= ttl_) out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::string> LocationCache::match(std::string_view lowered,
                                              TimePoint now) const {
  std::vector<std::string> out;
  for (auto& e : live_entries(now))
    if (lowered.find(e.location) != std::string_view::npos)
      out.push_back(std::move(e.location));
  return out;
}

std::size_t LocationCache::expire(TimePoint now) {
  std::size_t removed = 0;
  for (const auto& [k, v] : store_.scan_prefix(prefix_)) {
    auto e = decode_entry(std::string_view(k).substr(prefix_.size()), v);
    if (now - e.last_seen > ttl_ && store_.erase(k)) ++removed;
  }
  return removed;
}

std::vector<std::string> extract_locations(std::string_view text,
                                           const Gazetteer& gazetteer,
                                           LocationCache& cache, TimePoint now) {
  return extract_locations_lowered(to_lower_ascii(text), gazetteer, cache, now);
}

std::vector<std::string> extract_locations_lowered(std::string_view lowered,
                                                   const Gazetteer& gazetteer,
                                                   LocationCache& cache, TimePoint now) {
  auto hits = gazetteer.lookup(lowered);
  for (const auto& h : hits) cache.touch(h, LocationOrigin::extracted, now);
  auto cached = cache.match(lowered, now);
  hits.insert(hits.end(), cached.begin(), cached.end());
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

CaseReport parse_case_report(const nlohmann::json& j) {
  CaseReport r;
  try {
    const auto& d = j.at("date");
    std::optional<TimePoint> t;
    if (d.is_string()) t = parse_timestamp(d.get<std::string>());
    else if (d.is_number_integer()) t = from_epoch(d.get<std::int64_t>());
    if (!t) throw std::invalid_argument("case report: bad date");
    r.date = *t;
    r.region = normalize_term(j.value("region", std::string{}));
    r.new_cases = j.value("new_cases", std::int64_t{0});
    r.source = j.value("source", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("case report: ") + e.what());
  }
  if (r.new_cases < 0) throw std::invalid_argument("case report: negative new_cases");
  return r;
}

std::vector<CaseReport> load_case_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open case reports " + path.string());
  std::vector<CaseReport> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (collapse_whitespace(line).empty()) continue;
    try {
      out.push_back(parse_case_report(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return out;
}

bool absorb_authoritative_locations(const CaseReport& report, LocationCache& cache) {
  auto region = normalize_term(report.region);
  if (region.empty()) {
    cache.count_ignored();
    return false;
  }
  cache.touch(region, LocationOrigin::authoritative, report.date);
  return true;
}

SentimentLexicon::SentimentLexicon(std::map<std::string, double> weights) {
  for (auto& [t, w] : weights) {
    auto key = normalize_term(t);
    if (!key.empty()) weights_[key] = w;
  }
}

double SentimentLexicon::score_lowered(std::string_view lowered) const {
  double sum = 0.0;
  for (const auto& [term, w] : weights_) {
    auto n = count_word(lowered, term);
    if (n) sum += w * static_cast<double>(n);
  }
  return std::clamp(sum, -1.0, 1.0);
}

SentimentLexicon SentimentLexicon::from_json(const nlohmann::json& j) {
  return SentimentLexicon(j.get<std::map<std::string, double>>());
}

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

SentimentLexicon SentimentLexicon::defaults() {
  return SentimentLexicon({{"good", 0.5},       {"great", 0.6},
                           {"safe", 0.4},        {"recovered", 0.6},
                           {"recovering", 0.5},  {"hope", 0.4},
                           {"thank", 0.4},       {"thanks", 0.4},
                           {"support", 0.3},     {"better", 0.4},
                           {"bad", -0.5},        {"worse", -0.6},
                           {"terrible", -0.8},   {"scared", -0.6},
                           {"afraid", -0.5},     {"panic", -0.6},
                           {"died", -0.7},       {"death", -0.6},
                           {"crisis", -0.5},     {"shortage", -0.4},
                           {"sad", -0.5},        {"angry", -0.6}});
}

double score_sentiment(std::string_view text, const SentimentLexicon& lexicon) {
  return lexicon.score_lowered(to_lower_ascii(text));
}

GroupLexicons::GroupLexicons(std::map<std::string, std::vector<std::string>> groups) {
  for (auto& [g, terms] : groups) {
    if (g != kDeathsHospitalizations && g != kPositiveTests && g != kSymptomatic)
      throw std::invalid_argument("unknown topic group '" + g + "'");
    auto& dst = groups_[g];
    for (const auto& t : terms) {
      auto key = normalize_term(t);
      if (!key.empty()) dst.push_back(std::move(key));
    }
  }
}

std::vector<std::string> GroupLexicons::assign_lowered(std::string_view lowered) const {
  std::vector<std::string> out;
  for (const auto& [g, terms] : groups_)
    for (const auto& t : terms)
      if (contains_word_prefix(lowered, t)) {
        out.push_back(g);
        break;
      }
  return out;
}

GroupLexicons GroupLexicons::from_json(const nlohmann::json& j) {
  return GroupLexicons(j.get<std::map<std::string, std::vector<std::string>>>());
}

GroupLexicons GroupLexicons::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

GroupLexicons GroupLexicons::defaults() {
  return GroupLexicons(
      {{std::string(kDeathsHospitalizations),
        {"death", "died", "hospitalization", "hospitalized", "icu", "ventilator"}},
       {std::string(kPositiveTests), {"positive", "tested positive", "diagnosed"}},
       {std::string(kSymptomatic), {"fever", "cough", "loss of taste", "symptoms"}}});
}

std::vector<std::string> assign_topic_groups(std::string_view text,
                                             const GroupLexicons& lexicons) {
  return lexicons.assign_lowered(to_lower_ascii(text));
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace livek
