#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "livek/misinfo/misinfo.hpp"

using namespace livek;
namespace fs = std::filesystem;

namespace {

EnrichedPost enriched(std::string text, std::int64_t t = 0, std::string channel = "") {
  EnrichedPost p;
  p.post.id = static_cast<std::uint64_t>(t) + 1;
  p.post.created_at = from_epoch(t);
  p.post.text = std::move(text);
  p.post.channel = std::move(channel);
  p.refresh_derived();
  return p;
}

const char* kDocument =
    "== Background ==\n"
    "=== Origins ===\n"
    "text\n"
    "== Conspiracy theories ==\n"
    "=== Plandemic conspiracy ===\n"
    "=== Bioweapon theory ===\n"
    "=== 5G Towers claims ===\n"
    "=== Bill Gates microchip rumor ===\n"
    "=== The bioweapon theory ===\n"
    "== Fact checks ==\n"
    "=== Masks work ===\n";

}  // namespace

TEST(MisinfoKeywordSet, AppendOnlyWithTombstones) {
  auto set = MisinfoKeywordSet::with_defaults();
  EXPECT_TRUE(set.contains("bioweapon"));
  EXPECT_TRUE(set.contains("plandemic"));
  EXPECT_TRUE(set.add("5G Towers", from_epoch(5)));
  EXPECT_FALSE(set.add("5g towers", from_epoch(6)));
  set.tombstone("bioweapon");
  EXPECT_TRUE(set.is_tombstoned("bioweapon"));
  EXPECT_FALSE(set.add("bioweapon", from_epoch(7)));
  EXPECT_TRUE(set.match("a bioweapon story").empty());
  EXPECT_EQ(set.match("5g towers and the plandemic"),
            (std::vector<std::string>{"5g towers", "plandemic"}));
  set.source_versions()["wiki"] = from_epoch(9);
  auto back = MisinfoKeywordSet::from_json(set.to_json());
  EXPECT_TRUE(back.is_tombstoned("bioweapon"));
  EXPECT_EQ(back.active_terms(), set.active_terms());
  EXPECT_EQ(back.source_versions().at("wiki"), from_epoch(9));
}

TEST(Extraction, HeadlinesFromWantedSections) {
  auto r = extract_misinfo_terms(kDocument, {"conspiracy"});
  EXPECT_EQ(r.terms, (std::vector<std::string>{"plandemic", "bioweapon", "5g towers",
                                               "bill gates microchip"}));
  EXPECT_EQ(r.missing_sections, 0u);
  auto m = extract_misinfo_terms(kDocument, {"conspiracy", "treatments"});
  EXPECT_EQ(m.missing_sections, 1u);
  EXPECT_EQ(headline_to_term("The Conspiracy About Drinking Bleach"), "drinking bleach");
}

TEST(Extraction, BundledSnapshotYieldsFiveTerms) {
  std::ifstream in(fs::path(LIVEK_DATA_DIR) / "misinfo" / "conspiracies.wiki");
  std::stringstream buf;
  buf << in.rdbuf();
  auto r = extract_misinfo_terms(buf.str(), {"conspiracy"});
  EXPECT_EQ(r.terms, (std::vector<std::string>{"plandemic", "bioweapon", "5g towers",
                                               "bill gates microchip", "drinking bleach cures"}));
}

TEST(Refresh, SkipsUnreadableSources) {
  auto dir = fs::temp_directory_path() / "livek_misinfo_src";
  fs::create_directories(dir);
  std::ofstream(dir / "terms.json") << R"({"terms": ["Microchip", "bleach"]})";
  std::ofstream(dir / "bad.json") << "{oops";
  std::ofstream(dir / "wiki.txt") << kDocument;
  std::vector<MisinfoSource> sources{
      {"curated", dir / "terms.json", SourceFormat::terms_json, {}},
      {"broken", dir / "bad.json", SourceFormat::terms_json, {}},
      {"missing", dir / "nope.json", SourceFormat::terms_json, {}},
      {"wiki", dir / "wiki.txt", SourceFormat::sectioned, {"conspiracy"}}};
  auto set = MisinfoKeywordSet::with_defaults();
  auto r = refresh_misinfo_keywords(sources, set, from_epoch(100));
  EXPECT_EQ(r.skipped_sources, 2u);
  EXPECT_EQ(r.added, (std::vector<std::string>{"microchip", "bleach", "5g towers",
                                               "bill gates microchip"}));
  EXPECT_TRUE(set.source_versions().count("curated"));
  EXPECT_FALSE(set.source_versions().count("broken"));
  fs::remove_all(dir);
}

TEST(SourceSpec, ParsesAndResolvesRelativePaths) {
  auto s = MisinfoSource::from_json(
      nlohmann::json::parse(R"({"path": "w.txt", "format": "sectioned"})"), "/base");
  EXPECT_EQ(s.path, fs::path("/base/w.txt"));
  EXPECT_EQ(s.name, "w.txt");
  EXPECT_EQ(s.sections, (std::vector<std::string>{"conspiracy"}));
  EXPECT_THROW(MisinfoSource::from_json(nlohmann::json::parse(R"({"path": "x", "format": "pdf"})")),
               std::invalid_argument);
}

TEST(Authoritative, CaseInsensitiveExactChannel) {
  AuthoritativeSourceList list({"CDCgov", "who.int"});
  EXPECT_TRUE(list.matches("cdcgov"));
  EXPECT_TRUE(list.matches("WHO.INT"));
  EXPECT_FALSE(list.matches("cdcgov_fan"));
  auto p = enriched("update", 0, "CDCGOV");
  tag_authoritative(p, list);
  EXPECT_TRUE(p.authoritative);
  EXPECT_THROW(AuthoritativeSourceList::from_json(nlohmann::json::array()), std::invalid_argument);
  EXPECT_EQ(AuthoritativeSourceList::from_json(nlohmann::json::parse(R"({"sources": ["a"]})"))
                .names()
                .size(),
            1u);
}

TEST(WindowTagging, AuthoritativePostsKeepTermsButAreNotCounted) {
  auto set = MisinfoKeywordSet::with_defaults();
  std::vector<EnrichedPost> posts{enriched("the plandemic is fake", 1),
                                  enriched("debunking the bioweapon claim", 2, "WHO"),
                                  enriched("plain news", 3)};
  posts[1].authoritative = true;
  auto w = assign_window(from_epoch(0));
  auto r = tag_misinformation_window(posts, set, w);
  EXPECT_EQ(r.posts_in, 3u);
  EXPECT_EQ(r.tagged, 1u);
  EXPECT_EQ(posts[1].misinfo_terms, (std::vector<std::string>{"bioweapon"}));
  EXPECT_EQ(r.term_counts.size(), 1u);
  EXPECT_EQ(r.csv_row(), "1970-01-01T00:00:00Z,3,1,plandemic:1");
}

TEST(WindowTagging, TopTermsOrderedByCountThenTerm) {
  WindowTagReport r;
  r.term_counts = {{"b", 2}, {"a", 2}, {"c", 5}, {"d", 1}};
  EXPECT_EQ(r.top_terms(3), "c:5;a:2;b:2");
}

TEST(WindowTagging, ConservesPostsForAnyPartition) {
  auto set = MisinfoKeywordSet::with_defaults();
  std::mt19937 rng(4);
  std::vector<EnrichedPost> stream;
  for (int i = 0; i < 5000; ++i)
    stream.push_back(enriched(rng() % 7 ? "news" : "plandemic", i * 3 + static_cast<int>(rng() % 3)));
  std::map<TimePoint, std::vector<EnrichedPost>> windows;
  for (auto& p : stream) windows[assign_window(p.post.created_at).window_start].push_back(p);
  std::uint64_t sum = 0;
  for (auto& [start, posts] : windows) sum += tag_misinformation_window(posts, set, {start}).posts_in;
  EXPECT_EQ(sum, stream.size());
}

TEST(MisinfoTagger, ReloadsPublishedSet) {
  SharedStore store;
  MisinfoTagger tagger(MisinfoKeywordSet::with_defaults(), &store);
  std::vector<EnrichedPost> posts{enriched("5g towers again")};
  EXPECT_EQ(tagger.tag(posts, {}).tagged, 0u);
  auto set = MisinfoKeywordSet::with_defaults();
  set.add("5g towers", from_epoch(0));
  MisinfoTagger::publish(store, set);
  EXPECT_EQ(tagger.tag(posts, {}).tagged, 1u);
  EXPECT_EQ(tagger.reloads(), 1u);
  tagger.tag(posts, {});
  EXPECT_EQ(tagger.reloads(), 1u);
}

TEST(Piggyback, FlagsTrendingTermRidingMisinformation) {
  auto set = MisinfoKeywordSet::with_defaults();
  PiggybackDetector det(Duration(3600), Duration(600), 10, 0.7, 5);
  std::int64_t t = 0;
  // Quiet first bucket, then "chemtrails" surges alongside plandemic posts.
  for (int i = 0; i < 30; ++i, t += 20) det.observe(enriched("weather report sunny", t), set);
  for (int i = 0; i < 30; ++i, t += 20) {
    auto p = enriched(i % 2 ? "plandemic chemtrails" : "weather report", t);
    det.observe(p, set);
  }
  auto fresh = det.observe(enriched("weather", 1200), set);
  ASSERT_EQ(fresh.size(), 1u);
  EXPECT_EQ(fresh[0].term, "chemtrails");
  EXPECT_EQ(fresh[0].detected_at, from_epoch(1200));
  EXPECT_GT(fresh[0].score, 0.7);
  EXPECT_FALSE(set.contains("chemtrails"));
  EXPECT_EQ(det.log().size(), 1u);
}

TEST(Piggyback, IgnoresKnownTopicKeywords) {
  auto set = MisinfoKeywordSet::with_defaults();
  PiggybackDetector det(Duration(3600), Duration(600), 10, 0.7, 5);
  std::int64_t t = 0;
  for (int i = 0; i < 30; ++i, t += 20) det.observe(enriched("weather report sunny", t), set);
  for (int i = 0; i < 30; ++i, t += 20) {
    auto p = enriched(i % 2 ? "plandemic coronavirus" : "weather report", t);
    if (i % 2) p.matched_terms = {"coronavirus"};
    det.observe(p, set);
  }
  EXPECT_TRUE(det.observe(enriched("weather", 1200), set).empty());
}
