#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "livek/core/text.hpp"
#include "livek/ingest/archive.hpp"
#include "livek/ingest/keywords.hpp"
#include "livek/ingest/post.hpp"
#include "livek/ingest/synthetic.hpp"

using namespace livek;
namespace fs = std::filesystem;

namespace {

Rejection rejection(std::string_view line) {
  auto r = parse_post(line);
  EXPECT_TRUE(std::holds_alternative<Rejection>(r)) << line;
  return std::holds_alternative<Rejection>(r) ? std::get<Rejection>(r) : Rejection::empty;
}

fs::path write_lines(const std::string& name, const std::vector<std::string>& lines) {
  auto p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  for (const auto& l : lines) out << l << "\n";
  return p;
}

}  // namespace

TEST(ParsePost, ReadsLegacyRecord) {
  auto r = parse_post(
      R"({"created_at": "Sat Feb 29 18:59:56 +0000 2020", "id": 1233829273691049984,)"
      R"( "text": "Coronavirus update", "lang": "en", "user": {"screen_name": "CDCgov"}})");
  ASSERT_TRUE(std::holds_alternative<Post>(r));
  const auto& p = std::get<Post>(r);
  EXPECT_EQ(p.id, 1233829273691049984u);
  EXPECT_EQ(to_epoch(p.created_at), 1583002796);
  EXPECT_EQ(p.lang, "en");
  EXPECT_EQ(p.channel, "CDCgov");
  EXPECT_FALSE(p.is_retweet_of);
}

TEST(ParsePost, StringIdsAndRetweets) {
  auto r = parse_post(R"({"created_at": 1583002796, "id": "42", "text": "x", "retweeted_id": "41"})");
  ASSERT_TRUE(std::holds_alternative<Post>(r));
  EXPECT_EQ(std::get<Post>(r).is_retweet_of, 41u);
}

TEST(ParsePost, RejectionReasons) {
  EXPECT_EQ(rejection("   "), Rejection::empty);
  EXPECT_EQ(rejection("{not json"), Rejection::malformed);
  EXPECT_EQ(rejection("[1, 2]"), Rejection::malformed);
  EXPECT_EQ(rejection(R"({"id": 1, "text": "x"})"), Rejection::missing_field);
  EXPECT_EQ(rejection(R"({"id": -4, "text": "x", "created_at": 1})"), Rejection::bad_id);
  EXPECT_EQ(rejection(R"({"id": "12a", "text": "x", "created_at": 1})"), Rejection::bad_id);
  EXPECT_EQ(rejection(R"({"id": 1, "text": "x", "created_at": "soon"})"), Rejection::bad_timestamp);
  EXPECT_EQ(rejection("{\"id\": 1, \"text\": \"\xff\", \"created_at\": 1}"), Rejection::invalid_utf8);
}

TEST(ParsePost, ArchiveLineRoundTrip) {
  Post p{77, from_epoch(1583002796), "mask sales \"soar\"", "es", "someone", 76};
  for (bool iso : {false, true}) {
    auto back = parse_post(to_archive_line(p, iso));
    ASSERT_TRUE(std::holds_alternative<Post>(back));
    EXPECT_EQ(std::get<Post>(back), p);
  }
}

TEST(ArchiveReplay, CountsRejectionsAndStopsAtUntil) {
  auto path = write_lines("livek_replay.jsonl",
                          {R"({"id": 1, "created_at": 100, "text": "a"})", "garbage",
                           R"({"id": 2, "created_at": 160, "text": "b"})",
                           R"({"id": 3, "created_at": 220, "text": "c"})"});
  ArchiveReplay replay(path);
  replay.stop_after(from_epoch(160));
  std::vector<std::uint64_t> ids, offsets;
  while (auto r = replay.next()) {
    ids.push_back(r->payload.id);
    offsets.push_back(r->offset);
    EXPECT_EQ(r->event_time, r->payload.created_at);
  }
  EXPECT_EQ(ids, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(offsets, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(replay.stats().rejected, 1u);
  EXPECT_EQ(replay.stats().by_reason.at(Rejection::malformed), 1u);
}

TEST(ArchiveReplay, PacesByMultiplier) {
  auto path = write_lines("livek_pace.jsonl", {R"({"id": 1, "created_at": 100, "text": "a"})",
                                               R"({"id": 2, "created_at": 160, "text": "b"})",
                                               R"({"id": 3, "created_at": 160, "text": "c"})",
                                               R"({"id": 4, "created_at": 400, "text": "d"})"});
  std::vector<double> sleeps;
  ArchiveReplay replay(path, ReplaySpeed::parse("60"), nullptr,
                       [&](std::chrono::duration<double> d) { sleeps.push_back(d.count()); });
  while (replay.next()) {
  }
  ASSERT_EQ(sleeps.size(), 2u);
  EXPECT_DOUBLE_EQ(sleeps[0], 1.0);
  EXPECT_DOUBLE_EQ(sleeps[1], 4.0);
}

TEST(ArchiveReplay, MissingFileThrows) {
  EXPECT_THROW(ArchiveReplay("/nonexistent/archive.jsonl"), ArchiveError);
}

TEST(ReplaySpeed, Parse) {
  EXPECT_TRUE(ReplaySpeed::parse("max").max);
  auto s = ReplaySpeed::parse("2.5");
  EXPECT_FALSE(s.max);
  EXPECT_DOUBLE_EQ(s.multiplier, 2.5);
  EXPECT_THROW(ReplaySpeed::parse("0"), std::invalid_argument);
  EXPECT_THROW(ReplaySpeed::parse("fast"), std::invalid_argument);
}

TEST(KeywordSet, SeedsAreProtected) {
  auto set = KeywordSet::with_seeds({"Coronavirus", "COVID-19"});
  EXPECT_TRUE(set.contains("coronavirus"));
  EXPECT_FALSE(set.insert({"coronavirus", KeywordOrigin::learned}));
  EXPECT_FALSE(set.deactivate("covid-19"));
  EXPECT_TRUE(set.insert({"mask", KeywordOrigin::learned}));
  EXPECT_TRUE(set.deactivate("mask"));
  EXPECT_EQ(set.active_terms(), (std::vector<std::string>{"coronavirus", "covid-19"}));
  auto back = KeywordSet::from_json(set.to_json());
  EXPECT_EQ(back.size(), 3u);
  EXPECT_FALSE(back.find("mask")->active);
}

TEST(KeywordSet, SubstringAndTokenModes) {
  auto sub = KeywordSet::with_seeds({"pandemic", "新型冠状病毒"}, MatchMode::substring);
  auto tok = KeywordSet::with_seeds({"pandemic", "新型冠状病毒"}, MatchMode::token);
  std::string text = "prepandemic planning";
  EXPECT_EQ(sub.match(text), (std::vector<std::string>{"pandemic"}));
  EXPECT_TRUE(tok.match(text).empty());
  EXPECT_EQ(tok.match("新型冠状病毒 outbreak"), (std::vector<std::string>{"新型冠状病毒"}));
  Post p;
  p.text = "The PANDEMIC";
  EXPECT_EQ(match_keywords(p, tok), (std::vector<std::string>{"pandemic"}));
}

// Brute-force oracles over random texts drawn from a shared vocabulary.
TEST(KeywordSet, MatchesAgreeWithOracles) {
  std::vector<std::string> vocab{"covid",  "covid-19", "pandemic", "mask",  "masks",
                                 "corona", "virus",    "rona",     "the",   "sars-cov-2",
                                 "cov",    "新型",     "病毒",     "new",   "york"};
  std::vector<std::string> terms{"covid", "covid-19", "mask", "rona", "cov", "病毒", "new york"};
  auto sub = KeywordSet::with_seeds(terms, MatchMode::substring);
  auto tok = KeywordSet::with_seeds(terms, MatchMode::token);
  std::mt19937 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1), len(1, 8);
  const char* seps[] = {" ", ", ", "!", " #", "-"};
  for (int i = 0; i < 3000; ++i) {
    std::string text;
    auto n = len(rng);
    for (std::size_t k = 0; k < n; ++k) {
      if (k) text += seps[rng() % 5];
      text += vocab[pick(rng)];
    }
    std::set<std::string> want_sub;
    for (const auto& t : terms)
      if (text.find(t) != std::string::npos) want_sub.insert(t);
    auto got = sub.match(text);
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), want_sub) << text;

    auto toks = tokenize(text);
    std::set<std::string> tokset(toks.begin(), toks.end());
    for (const auto& t : tok.match(text))
      if (t.find(' ') == std::string::npos) EXPECT_TRUE(tokset.count(t)) << t << " in " << text;
    for (const auto& t : terms)
      if (t.find(' ') == std::string::npos && tokset.count(t))
        EXPECT_TRUE(term_matches(text, t, MatchMode::token)) << t << " in " << text;
  }
}

TEST(RelevanceFilter, RetweetsInheritWithinTtl) {
  auto clock = std::make_shared<ManualClock>(from_epoch(0));
  SharedStore store(clock);
  RelevanceFilter filter(store, std::chrono::hours(1));
  auto kw = KeywordSet::with_seeds({"coronavirus"});
  Post orig{1, from_epoch(0), "Coronavirus news", "", "", {}};
  EXPECT_EQ(filter.match(orig, "coronavirus news", kw), (std::vector<std::string>{"coronavirus"}));
  Post rt{2, from_epoch(10), "RT @a: Corona…", "", "", 1};
  EXPECT_EQ(filter.match(rt, "rt @a: corona…", kw), (std::vector<std::string>{"coronavirus"}));
  clock->set(from_epoch(3000));
  Post chained{3, from_epoch(3000), "RT @b: RT @a: Corona…", "", "", 2};
  EXPECT_EQ(filter.match(chained, "rt @b: rt @a: corona…", kw),
            (std::vector<std::string>{"coronavirus"}));
  clock->set(from_epoch(3600));
  Post stale{4, from_epoch(3600), "RT @a: Corona…", "", "", 1};
  EXPECT_TRUE(filter.match(stale, "rt @a: corona…", kw).empty());
}

TEST(Synthetic, DeterministicPerSeed) {
  auto cfg = SyntheticConfig::defaults();
  cfg.duration = std::chrono::minutes(30);
  cfg.base_rate_per_minute = 20;
  auto a = generate_synthetic(cfg);
  auto b = generate_synthetic(cfg);
  EXPECT_EQ(a.archive_lines(), b.archive_lines());
  cfg.seed = 2;
  EXPECT_NE(generate_synthetic(cfg).archive_lines(), a.archive_lines());
}

TEST(Synthetic, LabelsDescribeText) {
  auto cfg = SyntheticConfig::defaults();
  cfg.duration = std::chrono::minutes(120);
  cfg.base_rate_per_minute = 30;
  cfg.drift_schedule.push_back({"mask", cfg.start, cfg.start + std::chrono::minutes(60), 0.1});
  auto corpus = generate_synthetic(cfg);
  ASSERT_EQ(corpus.posts.size(), corpus.truth.size());
  ASSERT_GT(corpus.posts.size(), 1000u);
  auto seeds = KeywordSet::with_seeds(cfg.seed_terms);
  std::uint64_t prev = 0;
  std::size_t solo = 0;
  for (std::size_t i = 0; i < corpus.posts.size(); ++i) {
    const auto& p = corpus.posts[i];
    const auto& t = corpus.truth[i];
    EXPECT_EQ(p.id, t.id);
    EXPECT_GT(p.id, prev);
    prev = p.id;
    EXPECT_GE(p.created_at, cfg.start);
    EXPECT_LT(p.created_at, cfg.start + cfg.duration);
    auto lowered = to_lower_ascii(p.text);
    for (const auto& m : t.misinfo_terms) EXPECT_NE(lowered.find(m), std::string::npos);
    for (const auto& d : t.drift_terms) EXPECT_NE(lowered.find(d), std::string::npos);
    if (t.drift_solo) {
      ++solo;
      EXPECT_TRUE(seeds.match(lowered).empty()) << p.text;
      // Truncated retweets can lose the seed keyword earlier.
      if (!t.retweet) EXPECT_GE(p.created_at, cfg.drift_schedule[0].solo_start) << p.text;
    }
    if (t.retweet) EXPECT_TRUE(p.is_retweet_of);
  }
  EXPECT_GT(solo, 50u);
}

TEST(Synthetic, RejectsContradictorySettings) {
  auto cfg = SyntheticConfig::defaults();
  cfg.drift_schedule.push_back({"mask", cfg.start + std::chrono::minutes(10), cfg.start, 0.1});
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SyntheticConfig::defaults();
  cfg.relevant_fraction = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(SyntheticConfig::from_json(nlohmann::json::object()), ConfigError);
}
