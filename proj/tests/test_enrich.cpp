#include <gtest/gtest.h>

#include <random>

#include "livek/enrich/enrich.hpp"

using namespace livek;

namespace {

constexpr std::int64_t kDay = 86400;

Post make_post(std::uint64_t id, std::string text, std::int64_t t = 0) {
  Post p;
  p.id = id;
  p.created_at = from_epoch(t);
  p.text = std::move(text);
  return p;
}

}  // namespace

TEST(CleanPost, DropsEmptyAndKeepsIrrelevant) {
  auto kw = KeywordSet::with_seeds({"coronavirus"});
  EXPECT_FALSE(clean_post(make_post(1, " \n\t "), kw));
  auto p = clean_post(make_post(2, "  sunny   day "), kw);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->post.text, "sunny day");
  EXPECT_FALSE(p->relevance);
  auto q = clean_post(make_post(3, "CORONAVIRUS  cases"), kw);
  ASSERT_TRUE(q);
  EXPECT_TRUE(q->relevance);
  EXPECT_EQ(q->matched_terms, (std::vector<std::string>{"coronavirus"}));
  EXPECT_EQ(q->lowered, "coronavirus cases");
}

TEST(EnrichedPost, JsonRoundTrip) {
  EnrichedPost p;
  p.post = make_post(9, "Rally in Sturgis", 1597046400);
  p.post.lang = "en";
  p.matched_terms = {"rally"};
  p.relevance = true;
  p.locations = {"sturgis"};
  p.sentiment = -0.25;
  p.topic_groups = {"symptomatic"};
  p.misinfo_terms = {"plandemic"};
  p.authoritative = true;
  auto back = enriched_from_json(enriched_to_json(p));
  EXPECT_EQ(back.post, p.post);
  EXPECT_EQ(back.matched_terms, p.matched_terms);
  EXPECT_EQ(back.locations, p.locations);
  EXPECT_DOUBLE_EQ(back.sentiment, p.sentiment);
  EXPECT_EQ(back.topic_groups, p.topic_groups);
  EXPECT_EQ(back.misinfo_terms, p.misinfo_terms);
  EXPECT_TRUE(back.authoritative);
  EXPECT_EQ(back.lowered, "rally in sturgis");
}

TEST(Gazetteer, TokenBoundedLookup) {
  Gazetteer g({"New York", "York", "Hubei"});
  g.add("California", "US-CA");
  EXPECT_EQ(g.lookup("flights from new york and hubei"),
            (std::vector<std::string>{"hubei", "new york", "york"}));
  EXPECT_TRUE(g.lookup("yorkshire pudding").empty());
  EXPECT_EQ(g.region_code("california"), "US-CA");
  EXPECT_FALSE(g.region_code("hubei"));
  EXPECT_THROW(g.add("  "), std::invalid_argument);
  auto j = nlohmann::json::parse(R"(["Lombardy", {"name": "Madrid", "region": "ES-MD"}])");
  auto g2 = Gazetteer::from_json(j);
  EXPECT_EQ(g2.size(), 2u);
  EXPECT_EQ(g2.region_code("madrid"), "ES-MD");
}

TEST(LocationCache, AuthoritativeEntryMatchesUnknownPlace) {
  auto clock = std::make_shared<ManualClock>(from_epoch(0));
  SharedStore store(clock);
  LocationCache cache(store);
  Gazetteer g({"California"});
  CaseReport report{from_epoch(10 * kDay), "Sturgis", 12, "state"};
  EXPECT_TRUE(absorb_authoritative_locations(report, cache));
  auto locs = extract_locations("Sturgis rally crowds", g, cache, from_epoch(11 * kDay));
  EXPECT_EQ(locs, (std::vector<std::string>{"sturgis"}));
  EXPECT_EQ(cache.get("sturgis")->origin, LocationOrigin::authoritative);
}

TEST(LocationCache, ExpiresAtTtlBoundary) {
  SharedStore store(std::make_shared<ManualClock>(from_epoch(0)));
  LocationCache cache(store, Duration(7 * kDay));
  Gazetteer empty;
  cache.touch("Sturgis", LocationOrigin::authoritative, from_epoch(0));
  EXPECT_EQ(extract_locations("sturgis", empty, cache, from_epoch(7 * kDay)).size(), 1u);
  EXPECT_TRUE(extract_locations("sturgis", empty, cache, from_epoch(7 * kDay + 1)).empty());
  EXPECT_EQ(cache.expire(from_epoch(7 * kDay)), 0u);
  EXPECT_EQ(cache.expire(from_epoch(7 * kDay + 1)), 1u);
  EXPECT_FALSE(cache.get("sturgis"));
}

TEST(LocationCache, LastSeenNeverMovesBack) {
  SharedStore store;
  LocationCache cache(store);
  cache.touch("hubei", LocationOrigin::extracted, from_epoch(500));
  cache.touch("hubei", LocationOrigin::extracted, from_epoch(100));
  EXPECT_EQ(to_epoch(cache.get("hubei")->last_seen), 500);
}

TEST(LocationCache, GazetteerHitsRefreshCache) {
  SharedStore store;
  LocationCache cache(store, Duration(kDay));
  Gazetteer g({"Hubei"});
  extract_locations("hubei lockdown", g, cache, from_epoch(0));
  Gazetteer none;
  EXPECT_EQ(extract_locations("back in hubei", none, cache, from_epoch(kDay)),
            (std::vector<std::string>{"hubei"}));
}

TEST(CaseReports, ParseAndIgnoreEmptyRegion) {
  auto r = parse_case_report(nlohmann::json::parse(
      R"({"date": "2020-08-10", "region": " South  Dakota ", "new_cases": 90, "source": "sd"})"));
  EXPECT_EQ(r.region, "south dakota");
  EXPECT_EQ(to_epoch(r.date), 1597017600);
  EXPECT_THROW(parse_case_report(nlohmann::json::parse(R"({"date": "x"})")), std::invalid_argument);
  EXPECT_THROW(parse_case_report(nlohmann::json::parse(R"({"date": "2020-01-01", "new_cases": -1})")),
               std::invalid_argument);
  SharedStore store;
  LocationCache cache(store);
  EXPECT_FALSE(absorb_authoritative_locations({from_epoch(0), "", 3, "x"}, cache));
  EXPECT_EQ(cache.ignored_reports(), 1u);
}

TEST(Sentiment, SumsWeightsAndClamps) {
  SentimentLexicon lex({{"good", 0.5}, {"bad", -0.5}, {"terrible", -0.8}});
  EXPECT_DOUBLE_EQ(score_sentiment("No match here", lex), 0.0);
  EXPECT_DOUBLE_EQ(score_sentiment("good news", lex), 0.5);
  EXPECT_DOUBLE_EQ(score_sentiment("good, good, bad", lex), 0.5);
  EXPECT_DOUBLE_EQ(score_sentiment("Terrible terrible day", lex), -1.0);
  EXPECT_DOUBLE_EQ(score_sentiment("goodness", lex), 0.0);
}

TEST(Sentiment, AlwaysInRange) {
  auto lex = SentimentLexicon::defaults();
  std::vector<std::string> words;
  for (const auto& [w, _] : lex.weights()) words.push_back(w);
  words.push_back("neutral");
  std::mt19937 rng(5);
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    for (int k = 0; k < 12; ++k) text += words[rng() % words.size()] + " ";
    double s = score_sentiment(text, lex);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(TopicGroups, DefaultGroups) {
  auto g = GroupLexicons::defaults();
  EXPECT_EQ(assign_topic_groups("Two deaths and one hospitalized", g),
            (std::vector<std::string>{std::string(kDeathsHospitalizations)}));
  EXPECT_EQ(assign_topic_groups("tested positive, fever and cough", g),
            (std::vector<std::string>{std::string(kPositiveTests), std::string(kSymptomatic)}));
  EXPECT_TRUE(assign_topic_groups("ridiculous weather", g).empty());
}

TEST(TopicGroups, RejectsUnknownGroup) {
  EXPECT_THROW(GroupLexicons::from_json(nlohmann::json::parse(R"({"weather": ["rain"]})")),
               std::invalid_argument);
  auto g = GroupLexicons::from_json(nlohmann::json::parse(R"({"symptomatic": ["Loss of Smell"]})"));
  EXPECT_EQ(g.assign_lowered("sudden loss of smell"), (std::vector<std::string>{"symptomatic"}));
}

TEST(DataFiles, BundledLexiconsLoad) {
  std::filesystem::path dir = LIVEK_DATA_DIR;
  EXPECT_GT(Gazetteer::load(dir / "gazetteer.json").size(), 10u);
  EXPECT_FALSE(SentimentLexicon::load(dir / "sentiment.json").weights().empty());
  EXPECT_EQ(GroupLexicons::load(dir / "topic_groups.json").groups().size(), 3u);
}
