#include "livek/ingest/synthetic.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>

#include "livek/core/text.hpp"

namespace livek {
namespace {

std::vector<std::string> strings(const nlohmann::json& j, const char* key,
                                 std::vector<std::string> fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<std::vector<std::string>>();
}

TimePoint read_time(const nlohmann::json& j, const std::string& key,
                    TimePoint start) {
  if (j.contains(key)) {
    const auto& v = j.at(key);
    if (v.is_string()) {
      auto t = parse_timestamp(v.get<std::string>());
      if (!t) throw ConfigError("bad timestamp in field '" + key + "'");
      return *t;
    }
    return from_epoch(v.get<std::int64_t>());
  }
  auto minute_key = key + "_minute";
  if (j.contains(minute_key))
    return start + std::chrono::minutes(j.at(minute_key).get<std::int64_t>());
  throw ConfigError("drift entry needs '" + key + "' or '" + minute_key + "'");
}

}  // namespace

SyntheticConfig SyntheticConfig::defaults() {
  SyntheticConfig c;
  c.seed_terms = {"coronavirus", "covid-19", "ncov-19", "pandemic"};
  c.relevant_terms = {"outbreak",   "quarantine", "lockdown",  "cases",
                      "testing",    "vaccine",    "distancing", "health",
                      "officials",  "spread",     "emergency", "schools",
                      "closures",   "travel",     "hotline",   "clinic",
                      "nurses",     "doctors",    "tracing",   "curve",
                      "restrictions", "containment", "reopening", "update"};
  c.irrelevant_terms = {"weather",  "football", "election", "concert",
                        "recipe",   "coffee",   "music",    "movie",
                        "weekend",  "traffic",  "sunset",   "garden",
                        "puppy",    "pizza",    "game",     "stocks",
                        "fashion",  "vacation", "beach",    "birthday",
                        "soccer",   "basketball", "festival", "painting",
                        "hiking",   "podcast",  "sneakers", "brunch"};
  c.misinfo_terms = {"plandemic", "bioweapon", "5g towers", "microchip",
                     "bill gates"};
  c.region_pool = {"California", "New York", "Texas",   "Florida",
                   "Sturgis",    "Hubei",    "Lombardy", "Madrid",
                   "London",     "Seattle",  "Chicago", "Atlanta"};
  c.region_terms = {{"Sturgis", {"rally", "crowd", "gathering", "motorcycle"}}};
  c.topic_phrases = {
      {"deaths_hospitalizations",
       {"died", "hospitalized", "in the icu", "on a ventilator", "death toll"}},
      {"positive_tests", {"tested positive", "positive test", "diagnosed"}},
      {"symptomatic", {"fever", "cough", "loss of taste", "symptoms"}}};
  c.languages = {{"en", 0.634}, {"es", 0.123}, {"in", 0.038}, {"fr", 0.035},
                 {"pt", 0.032}, {"de", 0.030}, {"it", 0.028}, {"ja", 0.025},
                 {"und", 0.055}};
  c.authoritative_channels = {"CDCgov", "WHO", "nytimes", "CNN", "JohnsHopkins"};
  return c;
}

void SyntheticConfig::validate() const {
  if (duration <= Duration::zero()) throw ConfigError("duration must be positive");
  if (!(base_rate_per_minute > 0)) throw ConfigError("base_rate must be positive");
  if (seed_terms.empty()) throw ConfigError("vocab.seed must not be empty");
  if (relevant_terms.empty() || irrelevant_terms.empty())
    throw ConfigError("vocab.relevant and vocab.irrelevant must not be empty");
  for (double f : {relevant_fraction, misinfo_fraction, authoritative_fraction,
                   retweet_fraction, location_fraction, topic_fraction,
                   iso_time_fraction})
    if (f < 0 || f > 1) throw ConfigError("fractions must lie in [0,1]");
  double drift_total = 0;
  for (const auto& d : drift_schedule) {
    if (normalize_term(d.term).empty()) throw ConfigError("drift term is empty");
    if (d.solo_start < d.cooccurrence_start)
      throw ConfigError("drift term '" + d.term +
                        "': solo phase starts before co-occurrence phase");
    if (d.rate < 0 || d.rate > 1) throw ConfigError("drift rate must lie in [0,1]");
    drift_total += d.rate;
  }
  if (relevant_fraction + misinfo_fraction + authoritative_fraction +
          drift_total > 1.0 + 1e-12)
    throw ConfigError("post-kind fractions sum to more than 1");
  if (misinfo_fraction > 0 && misinfo_terms.empty())
    throw ConfigError("vocab.misinformation must not be empty");
  if (authoritative_fraction > 0 && authoritative_channels.empty())
    throw ConfigError("authoritative channels must not be empty");
  if (location_fraction > 0 && region_pool.empty())
    throw ConfigError("region_pool must not be empty");
  if (user_count == 0) throw ConfigError("user_count must be positive");
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig c = defaults();
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("start")) {
      auto t = parse_timestamp(j.at("start").get<std::string>());
      if (!t) throw ConfigError("bad 'start' timestamp");
      c.start = *t;
    }
    if (j.contains("duration_minutes"))
      c.duration = std::chrono::minutes(j.at("duration_minutes").get<std::int64_t>());
    c.base_rate_per_minute = j.value("base_rate_per_minute", c.base_rate_per_minute);
    if (j.contains("vocab")) {
      const auto& v = j.at("vocab");
      c.seed_terms = strings(v, "seed", c.seed_terms);
      c.relevant_terms = strings(v, "relevant", c.relevant_terms);
      c.irrelevant_terms = strings(v, "irrelevant", c.irrelevant_terms);
      c.misinfo_terms = strings(v, "misinformation", c.misinfo_terms);
    }
    c.region_pool = strings(j, "region_pool", c.region_pool);
    if (j.contains("region_terms"))
      c.region_terms = j.at("region_terms").get<decltype(c.region_terms)>();
    if (j.contains("topic_phrases"))
      c.topic_phrases = j.at("topic_phrases").get<decltype(c.topic_phrases)>();
    if (j.contains("languages")) {
      c.languages.clear();
      for (auto& [k, v] : j.at("languages").items())
        c.languages.emplace_back(k, v.get<double>());
    }
    c.authoritative_channels =
        strings(j, "authoritative_channels", c.authoritative_channels);
    c.user_count = j.value("user_count", c.user_count);
    if (j.contains("mix")) {
      const auto& m = j.at("mix");
      c.relevant_fraction = m.value("relevant", c.relevant_fraction);
      c.misinfo_fraction = m.value("misinformation", c.misinfo_fraction);
      c.authoritative_fraction = m.value("authoritative", c.authoritative_fraction);
      c.retweet_fraction = m.value("retweet", c.retweet_fraction);
      c.location_fraction = m.value("location", c.location_fraction);
      c.topic_fraction = m.value("topic_group", c.topic_fraction);
      c.iso_time_fraction = m.value("iso_time", c.iso_time_fraction);
    }
    if (j.contains("drift_schedule")) {
      for (const auto& d : j.at("drift_schedule")) {
        DriftTerm dt;
        dt.term = d.at("term").get<std::string>();
        dt.cooccurrence_start = read_time(d, "cooccurrence_start", c.start);
        dt.solo_start = read_time(d, "solo_start", c.start);
        dt.rate = d.value("rate", dt.rate);
        c.drift_schedule.push_back(dt);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json GroundTruth::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["kind"] = kind;
  j["relevant"] = relevant;
  j["misinfo_terms"] = misinfo_terms;
  j["region"] = region ? nlohmann::json(*region) : nlohmann::json(nullptr);
  j["topic_group"] = topic_group ? nlohmann::json(*topic_group) : nlohmann::json(nullptr);
  j["drift_terms"] = drift_terms;
  j["drift_solo"] = drift_solo;
  j["retweet"] = retweet;
  return j;
}

std::vector<std::string> SyntheticCorpus::archive_lines() const {
  std::vector<std::string> lines;
  lines.reserve(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i)
    lines.push_back(to_archive_line(posts[i], i < iso_time.size() && iso_time[i]));
  return lines;
}

namespace {

class Generator {
 public:
  explicit Generator(const SyntheticConfig& c) : c_(c), rng_(c.seed) {
    for (const auto& s : c_.seed_terms) seeds_lower_.push_back(normalize_term(s));
    for (const auto& m : c_.misinfo_terms) misinfo_lower_.push_back(normalize_term(m));
    for (const auto& d : c_.drift_schedule) drift_lower_.push_back(normalize_term(d.term));
    double total = 0;
    for (const auto& [_, w] : c_.languages) total += w;
    double acc = 0;
    for (const auto& [code, w] : c_.languages) {
      acc += w / total;
      lang_cdf_.emplace_back(acc, code);
    }
  }

  SyntheticCorpus run() {
    SyntheticCorpus corpus;
    const double per_second = c_.base_rate_per_minute / 60.0;
    std::exponential_distribution<double> gap(per_second);
    const double horizon = static_cast<double>(c_.duration.count());
    double t = gap(rng_);
    std::uint64_t id = 1233829273691049984ull;
    while (t < horizon) {
      auto created = c_.start + Duration{static_cast<std::int64_t>(t)};
      id += 1 + pick(997);
      Post post;
      GroundTruth truth;
      post.id = id;
      truth.id = id;
      post.created_at = created;
      post.lang = pick_language();
      if (!recent_.empty() && chance(c_.retweet_fraction)) {
        make_retweet(post, truth, corpus);
      } else {
        make_original(post, truth, created);
        recent_.push_back(corpus.posts.size());
        if (recent_.size() > 500) recent_.pop_front();
      }
      label_text(post, truth);
      corpus.iso_time.push_back(chance(c_.iso_time_fraction));
      corpus.posts.push_back(std::move(post));
      corpus.truth.push_back(std::move(truth));
      t += gap(rng_);
    }
    return corpus;
  }

 private:
  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  bool chance(double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
  }
  template <typename V>
  const auto& any_of(const V& v) {
    return v[pick(v.size())];
  }

  std::string pick_language() {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    for (const auto& [cdf, code] : lang_cdf_)
      if (u < cdf) return code;
    return lang_cdf_.empty() ? "en" : lang_cdf_.back().second;
  }

  std::string seed_mention() {
    std::string s = any_of(c_.seed_terms);
    switch (pick(4)) {
      case 0: return "#" + s;
      case 1:
        if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 32);
        return s;
      default: return s;
    }
  }

  void add_words(std::vector<std::string>& words,
                 const std::vector<std::string>& pool, std::size_t lo,
                 std::size_t hi) {
    auto n = lo + pick(hi - lo + 1);
    for (std::size_t i = 0; i < n; ++i) words.push_back(any_of(pool));
  }

  void shuffle(std::vector<std::string>& words) {
    std::shuffle(words.begin(), words.end(), rng_);
  }

  void maybe_region(std::vector<std::string>& tail, GroundTruth& truth,
                    double p) {
    if (c_.region_pool.empty() || !chance(p)) return;
    const auto& region = any_of(c_.region_pool);
    truth.region = normalize_term(region);
    tail.push_back("in " + region);
    if (auto it = c_.region_terms.find(region); it != c_.region_terms.end() &&
                                                !it->second.empty()) {
      tail.push_back(any_of(it->second));
      if (chance(0.5)) tail.push_back(any_of(it->second));
    }
  }

  void maybe_topic(std::vector<std::string>& tail, GroundTruth& truth, double p) {
    if (c_.topic_phrases.empty() || !chance(p)) return;
    auto it = c_.topic_phrases.begin();
    std::advance(it, static_cast<long>(pick(c_.topic_phrases.size())));
    if (it->second.empty()) return;
    truth.topic_group = it->first;
    tail.push_back(any_of(it->second));
  }

  const DriftTerm* active_drift(TimePoint t) {
    for (const auto& d : c_.drift_schedule)
      if (t >= d.cooccurrence_start && chance(d.rate)) return &d;
    return nullptr;
  }

  void make_original(Post& post, GroundTruth& truth, TimePoint t) {
    std::vector<std::string> words;
    std::vector<std::string> tail;
    post.channel = "user" + std::to_string(pick(c_.user_count));
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    const DriftTerm* drift = active_drift(t);
    if (drift) {
      truth.kind = "drift";
      truth.relevant = true;
      words.push_back(drift->term);
      if (t < drift->solo_start) {
        words.push_back(seed_mention());
        add_words(words, c_.relevant_terms, 1, 3);
      } else {
        add_words(words, c_.irrelevant_terms, 2, 4);
      }
      maybe_region(tail, truth, c_.location_fraction);
    } else if (u < c_.misinfo_fraction) {
      truth.kind = "misinformation";
      truth.relevant = true;
      words.push_back(seed_mention());
      words.push_back(any_of(c_.misinfo_terms));
      add_words(words, c_.relevant_terms, 1, 3);
      maybe_region(tail, truth, c_.location_fraction);
    } else if (u < c_.misinfo_fraction + c_.authoritative_fraction) {
      truth.kind = "authoritative";
      truth.relevant = true;
      post.channel = any_of(c_.authoritative_channels);
      words.push_back(seed_mention());
      add_words(words, c_.relevant_terms, 2, 4);
      maybe_region(tail, truth, c_.location_fraction);
      maybe_topic(tail, truth, c_.topic_fraction);
    } else if (u < c_.misinfo_fraction + c_.authoritative_fraction +
                       c_.relevant_fraction) {
      truth.kind = "relevant";
      truth.relevant = true;
      words.push_back(seed_mention());
      add_words(words, c_.relevant_terms, 2, 5);
      maybe_region(tail, truth, c_.location_fraction);
      maybe_topic(tail, truth, c_.topic_fraction);
    } else {
      truth.kind = "irrelevant";
      add_words(words, c_.irrelevant_terms, 3, 6);
      maybe_region(tail, truth, c_.location_fraction * 0.5);
    }
    shuffle(words);
    for (auto& w : tail) words.push_back(std::move(w));
    if (!words.empty() && !words[0].empty() && words[0][0] >= 'a' && words[0][0] <= 'z')
      words[0][0] = static_cast<char>(words[0][0] - 32);
    post.text = join(words, " ");
  }

  void make_retweet(Post& post, GroundTruth& truth, const SyntheticCorpus& corpus) {
    std::size_t idx = recent_[pick(recent_.size())];
    const Post& orig = corpus.posts[idx];
    const GroundTruth& ot = corpus.truth[idx];
    post.channel = "user" + std::to_string(pick(c_.user_count));
    post.is_retweet_of = orig.id;
    truth = ot;
    truth.id = post.id;
    truth.retweet = true;
    std::string body = orig.text;
    if (chance(0.5)) {
      // truncated quote, may lose the keywords
      auto words = tokenize_plain(orig.text);
      std::size_t keep = std::min<std::size_t>(words.size(), 1 + pick(3));
      words.resize(keep);
      body = join(words, " ") + "\xE2\x80\xA6";
    }
    post.text = "RT @" + orig.channel + ": " + body;
  }

  static std::vector<std::string> tokenize_plain(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto next = text.find(' ', pos);
      if (next == std::string::npos) next = text.size();
      if (next > pos) out.push_back(text.substr(pos, next - pos));
      pos = next + 1;
    }
    return out;
  }

  void label_text(const Post& post, GroundTruth& truth) {
    auto lowered = to_lower_ascii(post.text);
    truth.misinfo_terms.clear();
    for (const auto& m : misinfo_lower_)
      if (lowered.find(m) != std::string::npos) truth.misinfo_terms.push_back(m);
    truth.drift_terms.clear();
    for (const auto& d : drift_lower_)
      if (lowered.find(d) != std::string::npos) truth.drift_terms.push_back(d);
    bool has_seed = false;
    for (const auto& s : seeds_lower_)
      has_seed = has_seed || lowered.find(s) != std::string::npos;
    truth.drift_solo = !truth.drift_terms.empty() && !has_seed;
  }

  const SyntheticConfig& c_;
  std::mt19937_64 rng_;
  std::vector<std::string> seeds_lower_, misinfo_lower_, drift_lower_;
  std::vector<std::pair<double, std::string>> lang_cdf_;
  std::deque<std::size_t> recent_;
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  return Generator(config).run();
}

std::pair<std::filesystem::path, std::filesystem::path> write_corpus(
    const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto archive = dir / "archive.jsonl";
  auto truth = dir / "truth.jsonl";
  std::ofstream a(archive, std::ios::binary);
  std::ofstream t(truth, std::ios::binary);
  if (!a || !t) throw ConfigError("cannot write corpus into " + dir.string());
  for (const auto& line : corpus.archive_lines()) a << line << '\n';
  for (const auto& g : corpus.truth) t << g.to_json().dump() << '\n';
  if (!a || !t) throw ConfigError("write failed in " + dir.string());
  return {archive, truth};
}

}  // namespace livek
