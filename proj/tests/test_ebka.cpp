#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "livek/ebka/ebka.hpp"

using namespace livek;

namespace {

constexpr std::int64_t kHour = 3600, kDay = 86400;
const std::int64_t kRally = 1597046400;  // 2020-08-10T08:00:00Z

EnrichedPost located(std::uint64_t id, std::string text, std::int64_t t,
                     std::vector<std::string> locations, std::string channel = "u") {
  EnrichedPost p;
  p.post.id = id;
  p.post.created_at = from_epoch(t);
  p.post.text = std::move(text);
  p.post.channel = std::move(channel);
  p.locations = std::move(locations);
  p.refresh_derived();
  return p;
}

EventCluster sturgis_cluster() {
  std::vector<EnrichedPost> posts;
  for (std::uint64_t i = 0; i < 4; ++i)
    posts.push_back(located(i + 1, "Sturgis rally crowds packed", kRally + 60 * static_cast<std::int64_t>(i),
                            {"sturgis"}, "user" + std::to_string(i)));
  auto c = form_clusters(posts);
  EXPECT_EQ(c.size(), 1u);
  return c.front();
}

Evidence evidence(std::string id, EvidenceKind kind, std::int64_t t,
                  std::vector<std::string> terms = {"rally"}, std::string loc = "sturgis") {
  Evidence e;
  e.id = std::move(id);
  e.kind = kind;
  e.source = "nytimes";
  e.location = std::move(loc);
  e.time = from_epoch(t);
  e.terms = std::move(terms);
  e.arrived_at = e.time;
  return e;
}

struct ConstantMember : Member {
  double v;
  std::string name;
  ConstantMember(std::string n, double vote) : v(vote), name(std::move(n)) {}
  std::string id() const override { return name; }
  double score(const EventCluster&) const override { return v; }
};

}  // namespace

TEST(ClusterBuilder, GroupsByLocationAndWindow) {
  std::vector<EnrichedPost> posts{
      located(1, "rally one", kRally + 10, {"sturgis"}),
      located(2, "rally two", kRally + 20, {"sturgis", "south dakota"}),
      located(3, "rally three", kRally + 30, {"sturgis"}),
      located(4, "later", kRally + kHour + 5, {"sturgis"}),
      located(5, "nowhere", kRally + 40, {}),
  };
  auto misinfo = located(6, "plandemic rally", kRally + 50, {"sturgis"});
  misinfo.misinfo_terms = {"plandemic"};
  posts.push_back(misinfo);
  ClusterBuilder b(std::chrono::minutes(60), 1);
  std::size_t added = 0;
  for (const auto& p : posts) added += b.add(p);
  EXPECT_EQ(added, 4u);
  auto clusters = b.flush_all();
  ASSERT_EQ(clusters.size(), 3u);
  EXPECT_EQ(clusters[0].id, "south dakota/2020-08-10T08:00:00Z");
  EXPECT_EQ(clusters[1].id, "sturgis/2020-08-10T08:00:00Z");
  EXPECT_EQ(clusters[1].post_ids, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(clusters[2].post_ids, (std::vector<std::uint64_t>{4}));
  EXPECT_TRUE(std::binary_search(clusters[1].topic_terms.begin(), clusters[1].topic_terms.end(),
                                 std::string("rally")));
}

TEST(ClusterBuilder, FlushWaitsOneExtraWindow) {
  ClusterBuilder b(Duration(kHour), 1);
  b.add(located(1, "x", kRally, {"hubei"}));
  EXPECT_TRUE(b.flush(from_epoch(kRally + 2 * kHour - 1)).empty());
  EXPECT_EQ(b.flush(from_epoch(kRally + 2 * kHour)).size(), 1u);
  EXPECT_EQ(b.open_groups(), 0u);
}

TEST(ClusterBuilder, DropsSmallGroupsAndComputesFeatures) {
  std::vector<EnrichedPost> posts;
  for (std::uint64_t i = 0; i < 4; ++i) {
    auto p = located(i + 1, "rally", kRally, {"sturgis"}, i < 2 ? "a" : "b");
    p.sentiment = i % 2 ? 0.5 : -0.25;
    posts.push_back(p);
  }
  posts.push_back(located(9, "lonely", kRally, {"hubei"}));
  auto clusters = form_clusters(posts, std::chrono::minutes(60), 3);
  ASSERT_EQ(clusters.size(), 1u);
  const auto& f = clusters[0].features;
  EXPECT_EQ(f.size, 4u);
  EXPECT_DOUBLE_EQ(f.mean_sentiment, 0.125);
  EXPECT_DOUBLE_EQ(f.sentiment_extremity, 0.375);
  EXPECT_DOUBLE_EQ(f.source_diversity, 0.5);
}

TEST(Evidence, MatchRuleLagAndOverlap) {
  auto c = sturgis_cluster();
  MatchRule rule;
  EXPECT_TRUE(rule.matches(c, evidence("a", EvidenceKind::supporting, kRally + 10 * kDay)));
  EXPECT_TRUE(rule.matches(c, evidence("b", EvidenceKind::supporting, kRally + kHour + 14 * kDay)));
  EXPECT_FALSE(rule.matches(c, evidence("c", EvidenceKind::supporting, kRally + kHour + 14 * kDay + 1)));
  EXPECT_TRUE(rule.matches(c, evidence("d", EvidenceKind::supporting, kRally - 14 * kDay)));
  EXPECT_FALSE(rule.matches(c, evidence("e", EvidenceKind::supporting, kRally, {"beach"})));
  EXPECT_FALSE(rule.matches(c, evidence("f", EvidenceKind::supporting, kRally, {"rally"}, "hubei")));
  auto j = nlohmann::json::parse(
      R"({"kind": "contradicting", "source": "WHO", "location": " Sturgis ", "time": "2020-08-20",
          "terms": ["Rally"]})");
  auto ev = Evidence::from_json(j, 3);
  EXPECT_EQ(ev.id, "ev-3");
  EXPECT_EQ(ev.location, "sturgis");
  EXPECT_EQ(ev.terms, (std::vector<std::string>{"rally"}));
  EXPECT_EQ(ev.arrived_at, ev.time);
  EXPECT_THROW(Evidence::from_json(nlohmann::json::parse(R"({"kind": "maybe"})")), std::invalid_argument);
}

TEST(Evidence, NetThresholds) {
  auto c = sturgis_cluster();
  EvidenceStore store;
  EXPECT_EQ(resolve_status(c, store), ClusterStatus::tentative);
  store.add(evidence("s1", EvidenceKind::supporting, kRally));
  store.add(evidence("c1", EvidenceKind::contradicting, kRally));
  store.add(evidence("c2", EvidenceKind::contradicting, kRally));
  EXPECT_FALSE(store.add(evidence("s1", EvidenceKind::contradicting, kRally)));
  c.evidence_ids = {"s1"};
  EXPECT_EQ(resolve_status(c, store), ClusterStatus::corroborated);
  c.evidence_ids = {"s1", "c1"};
  EXPECT_EQ(resolve_status(c, store), ClusterStatus::tentative);
  c.evidence_ids = {"s1", "c1", "c2"};
  EXPECT_EQ(resolve_status(c, store), ClusterStatus::refuted);
  EXPECT_EQ(attach_evidence(c, *store.find("s1"), MatchRule{}), AttachResult::already_attached);
}

TEST(TeamedClassifier, JoiningMembersGetOneOverMPlusOne) {
  TeamedClassifier team(0.5);
  team.add_member(std::make_shared<ConstantMember>("a", 1.0));
  EXPECT_DOUBLE_EQ(team.weights()[0], 1.0);
  team.add_member(std::make_shared<ConstantMember>("b", 0.0));
  EXPECT_NEAR(team.weights()[1], 0.5, 1e-15);
  team.update_weights({1.0, 0.0}, 1);
  auto before = team.weights();
  team.add_member(std::make_shared<ConstantMember>("c", 0.5));
  auto w = team.weights();
  EXPECT_NEAR(w[2], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(w[0] / w[1], before[0] / before[1], 1e-12);
}

TEST(TeamedClassifier, MultiplicativeUpdateOracle) {
  TeamedClassifier team(0.3);
  std::vector<double> votes{0.9, 0.2, 0.5, 0.0};
  for (std::size_t i = 0; i < votes.size(); ++i)
    team.add_member(std::make_shared<ConstantMember>("m" + std::to_string(i), votes[i]));
  std::vector<double> w(votes.size(), 0.25);
  std::mt19937 rng(2);
  for (int step = 0; step < 200; ++step) {
    int outcome = rng() % 2 ? 1 : -1;
    team.update_weights(votes, outcome);
    double sum = 0;
    for (std::size_t i = 0; i < w.size(); ++i) sum += (w[i] *= std::exp(0.3 * outcome * (2 * votes[i] - 1)));
    for (auto& x : w) x /= sum;
    auto got = team.weights();
    for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(got[i], w[i], 1e-9);
  }
}

TEST(TeamedClassifier, AdversarialWeightLaw) {
  TeamedClassifier team(0.5);
  team.add_member(std::make_shared<ConstantMember>("always_yes", 1.0));
  team.add_member(std::make_shared<ConstantMember>("coin", 0.5));
  double w0 = team.unnormalized_weight(0);
  for (int k = 1; k <= 40; ++k) {
    team.update_weights(team.votes({}), -1);
    EXPECT_NEAR(team.unnormalized_weight(0), w0 * std::exp(-0.5 * k), 1e-9);
    auto w = team.weights();
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-9);
    for (double x : w) EXPECT_GT(x, 0.0);
  }
}

TEST(TeamedClassifier, RejectsBadInput) {
  EXPECT_THROW(TeamedClassifier(0.0), std::invalid_argument);
  TeamedClassifier team;
  team.add_member(std::make_shared<ConstantMember>("a", 1.0));
  EXPECT_THROW(team.update_weights({1.0, 1.0}, 1), std::invalid_argument);
  EXPECT_THROW(team.update_weights({1.0}, 0), std::invalid_argument);
  EXPECT_THROW(team.update_weights({1.5}, 1), std::invalid_argument);
  EXPECT_THROW(TeamedClassifier().predict({}), std::logic_error);
}

TEST(TeamedClassifier, TrendMemberUsesFrequentTerms) {
  auto team = TeamedClassifier::with_default_members({"rally"});
  ASSERT_EQ(team.size(), 4u);
  std::vector<EnrichedPost> trend{located(1, "mask mandate now", 0, {}),
                                  located(2, "mask shortage", 0, {}),
                                  located(3, "mandate protest mask", 0, {})};
  add_trend_member(team, trend, 2);
  ASSERT_EQ(team.size(), 5u);
  EXPECT_EQ(team.member(4).id(), "trend:mask+mandate");
  EXPECT_NEAR(team.weights()[4], 0.2, 1e-12);
  EXPECT_THROW(add_trend_member(team, {}), std::invalid_argument);
}

TEST(Corroboration, RetroactiveFlipIsLoggedOnce) {
  CorroborationEngine engine(TeamedClassifier::with_default_members({"rally"}), MatchRule{},
                             AuthoritativeSourceList({"nytimes"}));
  auto c = sturgis_cluster();
  EXPECT_TRUE(engine.add_cluster(c).empty());
  EXPECT_EQ(engine.find(c.id)->status, ClusterStatus::tentative);
  auto before = engine.team().weights();
  auto ev = evidence("ev-1", EvidenceKind::supporting, kRally + 10 * kDay);
  auto changes = retroactive_correct(engine, ev);
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0].old_status, ClusterStatus::tentative);
  EXPECT_EQ(changes[0].new_status, ClusterStatus::corroborated);
  EXPECT_TRUE(retroactive_correct(engine, ev).empty());
  EXPECT_EQ(engine.change_log().size(), 1u);
  EXPECT_EQ(engine.change_log_csv(),
            "cluster_id,old_status,new_status,evidence_id\n"
            "sturgis/2020-08-10T08:00:00Z,tentative,corroborated,ev-1\n");
  EXPECT_NE(engine.team().weights(), before);
  // keyword_presence voted yes on a corroborated cluster and gains weight.
  EXPECT_GT(engine.team().weights()[0], before[0]);
}

TEST(Corroboration, EvidenceBeforeClusterAndOffListSources) {
  CorroborationEngine engine(TeamedClassifier::with_default_members({"rally"}), MatchRule{},
                             AuthoritativeSourceList({"nytimes"}));
  auto blog = evidence("blog", EvidenceKind::contradicting, kRally);
  blog.source = "randomblog";
  EXPECT_TRUE(engine.ingest_evidence(blog).empty());
  EXPECT_EQ(engine.rejected_evidence(), 1u);
  engine.ingest_evidence(evidence("early", EvidenceKind::supporting, kRally + kDay));
  auto changes = engine.add_cluster(sturgis_cluster());
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0].evidence_id, "early");
}

TEST(Corroboration, SizePercentileAtInsert) {
  CorroborationEngine engine(TeamedClassifier::with_default_members({}));
  auto make = [](std::string loc, std::size_t n) {
    EventCluster c;
    c.location = loc;
    c.id = loc;
    for (std::size_t i = 0; i < n; ++i) c.post_ids.push_back(i + 1);
    return c;
  };
  engine.add_cluster(make("a", 5));
  engine.add_cluster(make("b", 3));
  engine.add_cluster(make("c", 5));
  engine.add_cluster(make("d", 10));
  EXPECT_DOUBLE_EQ(engine.find("a")->features.size_percentile, 1.0);
  EXPECT_DOUBLE_EQ(engine.find("b")->features.size_percentile, 0.5);
  EXPECT_DOUBLE_EQ(engine.find("c")->features.size_percentile, 1.0);
  EXPECT_DOUBLE_EQ(engine.find("d")->features.size_percentile, 1.0);
  EXPECT_THROW(engine.add_cluster(make("a", 2)), std::invalid_argument);
}

TEST(Corroboration, FinalStatusIsOrderIndependent) {
  auto base = sturgis_cluster();
  std::vector<Evidence> pool{evidence("s1", EvidenceKind::supporting, kRally),
                             evidence("s2", EvidenceKind::supporting, kRally + kDay),
                             evidence("c1", EvidenceKind::contradicting, kRally),
                             evidence("c2", EvidenceKind::contradicting, kRally + 2 * kDay),
                             evidence("x", EvidenceKind::supporting, kRally, {"beach"})};
  std::vector<std::size_t> idx{0, 1, 2, 3, 4};
  std::optional<ClusterStatus> first;
  do {
    CorroborationEngine engine(TeamedClassifier::with_default_members({"rally"}));
    engine.add_cluster(base);
    for (auto i : idx) engine.ingest_evidence(pool[i]);
    auto st = engine.find(base.id)->status;
    if (!first) first = st;
    ASSERT_EQ(st, *first);
  } while (std::next_permutation(idx.begin(), idx.end()));
  EXPECT_EQ(*first, ClusterStatus::tentative);
}
