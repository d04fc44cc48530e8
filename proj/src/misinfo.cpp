#include "livek/misinfo/misinfo.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "livek/core/text.hpp"

namespace livek {

MisinfoKeywordSet MisinfoKeywordSet::with_defaults(TimePoint now) {
  MisinfoKeywordSet s;
  s.add("bioweapon", now);
  s.add("plandemic", now);
  return s;
}

bool MisinfoKeywordSet::add(std::string_view term, TimePoint now) {
  auto key = normalize_term(term);
  if (key.empty() || tombstones_.count(key)) return false;
  KeywordEntry e;
  e.term = key;
  e.origin = KeywordOrigin::misinfo;
  e.first_seen = now;
  return set_.insert(std::move(e));
}

void MisinfoKeywordSet::tombstone(std::string_view term) {
  auto key = normalize_term(term);
  if (key.empty()) return;
  tombstones_.insert(key);
  set_.deactivate(key);
}

bool MisinfoKeywordSet::is_tombstoned(std::string_view term) const {
  return tombstones_.count(normalize_term(term)) > 0;
}

bool MisinfoKeywordSet::contains(std::string_view term) const {
  return set_.contains(term);
}

nlohmann::json MisinfoKeywordSet::to_json() const {
  nlohmann::json versions = nlohmann::json::object();
  for (const auto& [name, t] : versions_) versions[name] = format_iso8601(t);
  return {{"keywords", set_.to_json()},
          {"tombstones", tombstones_},
          {"source_versions", versions}};
}

MisinfoKeywordSet MisinfoKeywordSet::from_json(const nlohmann::json& j) {
  MisinfoKeywordSet s;
  s.set_ = KeywordSet::from_json(j.at("keywords"));
  for (const auto& t : j.value("tombstones", std::vector<std::string>{}))
    s.tombstones_.insert(t);
  if (j.contains("source_versions"))
    for (auto& [name, v] : j.at("source_versions").items())
      if (auto t = parse_timestamp(v.get<std::string>())) s.versions_[name] = *t;
  return s;
}

MisinfoSource MisinfoSource::from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base) {
  MisinfoSource s;
  s.path = j.at("path").get<std::string>();
  if (s.path.is_relative() && !base.empty()) s.path = (base / s.path).lexically_normal();
  s.name = j.value("name", s.path.filename().string());
  auto fmt = j.value("format", std::string("terms_json"));
  if (fmt == "terms_json") s.format = SourceFormat::terms_json;
  else if (fmt == "sectioned") s.format = SourceFormat::sectioned;
  else throw std::invalid_argument("unknown misinformation source format '" + fmt + "'");
  if (j.contains("sections")) s.sections = j.at("sections").get<std::vector<std::string>>();
  return s;
}

namespace {

const std::unordered_set<std::string>& generic_headline_words() {
  static const std::unordered_set<std::string> words = {
      "conspiracy", "conspiracies", "theory", "theories", "claim", "claims",
      "myth",       "myths",        "rumor",  "rumors",   "rumour", "rumours",
      "false",      "the",          "a",      "an",       "of",     "about",
      "that",       "and",          "on",     "in",       "to",     "is"};
  return words;
}

// Returns heading level and title for "== Title ==" lines, else 0.
int parse_heading(std::string_view line, std::string& title) {
  auto trimmed = collapse_whitespace(line);
  std::size_t lead = 0;
  while (lead < trimmed.size() && trimmed[lead] == '=') ++lead;
  std::size_t trail = 0;
  while (trail < trimmed.size() - lead && trimmed[trimmed.size() - 1 - trail] == '=')
    ++trail;
  if (lead < 2 || lead != trail || trimmed.size() <= lead + trail) return 0;
  title = collapse_whitespace(std::string_view(trimmed).substr(lead, trimmed.size() - lead - trail));
  return title.empty() ? 0 : static_cast<int>(lead);
}

}  // namespace

std::string headline_to_term(std::string_view headline) {
  std::vector<std::string> kept;
  for (auto& tok : tokenize(to_lower_ascii(headline)))
    if (!generic_headline_words().count(tok)) kept.push_back(std::move(tok));
  return join(kept, " ");
}

ExtractResult extract_misinfo_terms(std::string_view document,
                                    const std::vector<std::string>& sections) {
  ExtractResult result;
  std::vector<std::string> wanted;
  for (const auto& s : sections) wanted.push_back(normalize_term(s));
  std::vector<bool> found(wanted.size(), false);
  bool in_wanted = false;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(document)};
  std::string line, title;
  while (std::getline(in, line)) {
    int level = parse_heading(line, title);
    if (level == 0) continue;
    if (level == 2) {
      auto lowered = to_lower_ascii(title);
      in_wanted = false;
      for (std::size_t i = 0; i < wanted.size(); ++i)
        if (lowered.find(wanted[i]) != std::string::npos) {
          in_wanted = true;
          found[i] = true;
        }
      continue;
    }
    if (!in_wanted) continue;
    auto term = headline_to_term(title);
    if (!term.empty() && seen.insert(term).second) result.terms.push_back(term);
  }
  if (!document.empty())
    result.missing_sections = static_cast<std::size_t>(
        std::count(found.begin(), found.end(), false));
  return result;
}

RefreshResult refresh_misinfo_keywords(const std::vector<MisinfoSource>& sources,
                                       MisinfoKeywordSet& set, TimePoint now) {
  RefreshResult r;
  for (const auto& src : sources) {
    std::ifstream in(src.path, std::ios::binary);
    if (!in) {
      ++r.skipped_sources;
      continue;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    std::vector<std::string> terms;
    if (src.format == SourceFormat::terms_json) {
      try {
        auto j = nlohmann::json::parse(buf.str());
        terms = j.at("terms").get<std::vector<std::string>>();
      } catch (const nlohmann::json::exception&) {
        ++r.skipped_sources;
        continue;
      }
    } else {
      auto ex = extract_misinfo_terms(buf.str(), src.sections);
      r.missing_sections += ex.missing_sections;
      terms = std::move(ex.terms);
    }
    for (const auto& t : terms)
      if (set.add(t, now)) r.added.push_back(normalize_term(t));
    set.source_versions()[src.name] = now;
  }
  return r;
}

AuthoritativeSourceList::AuthoritativeSourceList(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    auto key = normalize_term(n);
    if (!key.empty()) names_.insert(std::move(key));
  }
}

bool AuthoritativeSourceList::matches(std::string_view channel) const {
  if (channel.empty()) return false;
  return names_.count(normalize_term(channel)) > 0;
}

AuthoritativeSourceList AuthoritativeSourceList::from_json(const nlohmann::json& j) {
  const auto& arr = j.is_object() ? j.at("sources") : j;
  AuthoritativeSourceList list(arr.get<std::vector<std::string>>());
  if (list.empty()) throw std::invalid_argument("authoritative source list is empty");
  return list;
}

AuthoritativeSourceList AuthoritativeSourceList::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

void tag_authoritative(EnrichedPost& post, const AuthoritativeSourceList& list) {
  post.authoritative = list.matches(post.post.channel);
}

std::string WindowTagReport::top_terms(std::size_t n) const {
  std::vector<std::pair<std::string, std::uint64_t>> v(term_counts.begin(),
                                                       term_counts.end());
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (v.size() > n) v.resize(n);
  std::string out;
  for (const auto& [t, c] : v) {
    if (!out.empty()) out.push_back(';');
    out += t + ":" + std::to_string(c);
  }
  return out;
}

std::string WindowTagReport::csv_row() const {
  return format_iso8601(window.window_start) + "," + std::to_string(posts_in) + "," +
         std::to_string(tagged) + "," + top_terms();
}

WindowTagReport tag_misinformation_window(std::vector<EnrichedPost>& posts,
                                          const MisinfoKeywordSet& set,
                                          const WindowAssignment& window) {
  WindowTagReport report;
  report.window = window;
  for (auto& p : posts) {
    ++report.posts_in;
    if (p.lowered.empty() && !p.post.text.empty()) p.refresh_derived();
    p.misinfo_terms = set.match(p.lowered);
    if (p.misinfo_terms.empty() || p.authoritative) continue;
    ++report.tagged;
    for (const auto& t : p.misinfo_terms) ++report.term_counts[t];
  }
  return report;
}

std::vector<PiggybackCandidate> detect_piggyback(
    const std::vector<TrendingTerm>& trending, const MisinfoKeywordSet& set,
    const CooccurrenceStats& stats, double min_score, std::uint64_t min_count) {
  std::vector<PiggybackCandidate> out;
  if (set.active_terms().empty()) return out;
  for (const auto& t : trending) {
    if (set.contains(t.term) || !set.match(t.term).empty()) continue;
    auto c = stats.counts(t.term);
    if (c.n < min_count) continue;
    double score = score_counts(c, stats.total(), stats.seed_posts(), Scorer::pmi);
    if (score > min_score) out.push_back({t.term, score, {}});
  }
  return out;
}

MisinfoTagger::MisinfoTagger(MisinfoKeywordSet initial, SharedStore* store)
    : view_(std::move(initial)), store_(store) {}

void MisinfoTagger::publish(SharedStore& store, const MisinfoKeywordSet& set) {
  auto body = set.to_json().dump();
  store.put("misinfo:keywords", body);
  store.update("misinfo:version", [](const std::optional<std::string>& cur) {
    std::uint64_t v = cur ? std::stoull(*cur) : 0;
    return std::optional<std::string>(std::to_string(v + 1));
  });
}

void MisinfoTagger::refresh_view() {
  if (!store_) return;
  auto v = store_->get("misinfo:version");
  if (!v || *v == version_) return;
  if (auto body = store_->get("misinfo:keywords")) {
    view_ = MisinfoKeywordSet::from_json(nlohmann::json::parse(*body));
    version_ = *v;
    ++reloads_;
  }
}

WindowTagReport MisinfoTagger::tag(std::vector<EnrichedPost>& posts,
                                   const WindowAssignment& w) {
  refresh_view();
  return tag_misinformation_window(posts, view_, w);
}

PiggybackDetector::PiggybackDetector(Duration window, Duration slide, std::size_t top_k,
                                     double min_score, std::uint64_t min_count)
    : stats_(window, slide), top_k_(top_k), min_score_(min_score), min_count_(min_count) {
  candidates_.window = window;
  candidates_.slide = slide;
}

std::vector<PiggybackCandidate> PiggybackDetector::observe(const EnrichedPost& post,
                                                           const MisinfoKeywordSet& set) {
  std::vector<PiggybackCandidate> fresh;
  auto bucket = floor_to(post.post.created_at, stats_.slide());
  auto current = stats_.current_bucket();
  if (current && bucket > *current) {
    auto history = stats_.bucket_history();
    if (history.size() >= 2) {
      auto trending = detect_trending(history, top_k_);
      for (auto& c : detect_piggyback(trending, set, stats_, min_score_, min_count_)) {
        if (topic_terms_.count(c.term) || !seen_.insert(c.term).second) continue;
        c.detected_at = bucket;
        log_.push_back(c);
        fresh.push_back(std::move(c));
      }
    }
  }
  topic_terms_.insert(post.matched_terms.begin(), post.matched_terms.end());
  bool misinfo = !post.misinfo_terms.empty() || !set.match(post.lowered).empty();
  stats_.observe(post.post.created_at,
                 extract_candidates(post, candidates_, default_stopwords()), misinfo);
  return fresh;
}

}  // namespace livek
