#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "livek/enrich/enrich.hpp"
#include "livek/pipeline/config.hpp"

using namespace livek;
namespace fs = std::filesystem;

namespace {

const fs::path kData = LIVEK_DATA_DIR;

nlohmann::json fixture_config() { return read_json_file(kData / "fixture" / "config.json"); }

std::vector<std::string> problems_of(const nlohmann::json& j) {
  try {
    PipelineConfig::from_json(j, kData / "fixture");
  } catch (const ValidationError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& field) {
  for (const auto& p : problems)
    if (p.rfind(field, 0) == 0) return true;
  return false;
}

struct EnvGuard {
  std::string name;
  EnvGuard(std::string n, const char* v) : name(std::move(n)) { ::setenv(name.c_str(), v, 1); }
  ~EnvGuard() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST(Config, BundledConfigsLoad) {
  auto c = PipelineConfig::load(kData / "fixture" / "config.json");
  EXPECT_EQ(c.seed, 20200810u);
  EXPECT_TRUE(fs::exists(c.archive));
  EXPECT_EQ(c.match_mode, MatchMode::token);
  EXPECT_EQ(c.promotion.min_count, 8u);
  EXPECT_EQ(c.misinfo_sources.size(), 2u);
  EXPECT_EQ(c.topology.jobs.size(), 8u);
  EXPECT_EQ(c.topology.links.size(), 6u);
  EXPECT_EQ(c.retweet_ttl, std::chrono::hours(24));
  EXPECT_EQ(c.match_rule.lag_tolerance, std::chrono::hours(24 * 14));
  auto d = PipelineConfig::load(kData / "config.json");
  EXPECT_EQ(d.promotion.min_count, 25u);
  auto durable = PipelineConfig::load(kData / "fixture" / "config_durable.json");
  for (const auto& l : durable.topology.links) {
    EXPECT_EQ(l.kind, "log");
    EXPECT_TRUE(l.path.is_absolute());
  }
}

TEST(Config, MissingRequiredFieldsAreNamed) {
  auto j = fixture_config();
  j.erase("seed");
  j.erase("archive");
  j["enrichment"].erase("gazetteer");
  j.erase("authoritative_sources");
  auto p = problems_of(j);
  EXPECT_TRUE(mentions(p, "seed"));
  EXPECT_TRUE(mentions(p, "archive"));
  EXPECT_TRUE(mentions(p, "enrichment.gazetteer"));
  EXPECT_TRUE(mentions(p, "authoritative_sources"));
}

TEST(Config, TypeAndRangeErrors) {
  auto j = fixture_config();
  j["seed"] = "abc";
  j["keywords"]["match_mode"] = "fuzzy";
  j["corroboration"]["eta"] = -1;
  j["analytics"]["max_lag_days"] = -2;
  j["speed"] = "warp";
  j["until"] = "later";
  j["misinformation"]["sources"][0]["path"] = "nope.wiki";
  auto p = problems_of(j);
  for (const char* f : {"seed", "keywords.match_mode", "corroboration.eta", "analytics.max_lag_days",
                        "speed", "until", "misinformation.sources[0].path"})
    EXPECT_TRUE(mentions(p, f)) << f;
}

TEST(Config, SyntheticBlockReplacesArchive) {
  auto j = fixture_config();
  j.erase("archive");
  j["synthetic"] = {{"duration_minutes", 10}, {"base_rate_per_minute", 5}};
  auto c = PipelineConfig::from_json(j, kData / "fixture");
  ASSERT_TRUE(c.synthetic);
  EXPECT_EQ(c.synthetic->seed, 20200810u);
  EXPECT_EQ(c.synthetic->duration, std::chrono::minutes(10));
}

TEST(Config, TopologyErrors) {
  auto j = fixture_config();
  j["topology"] = default_topology_json();
  j["topology"]["links"].push_back(j["topology"]["links"][0]);
  j["topology"]["links"][1]["kind"] = "pipe";
  auto p = problems_of(j);
  EXPECT_TRUE(mentions(p, "topology.links"));

  j["topology"] = default_topology_json();
  j["topology"]["jobs"][0]["phase"] = "warmup";
  p = problems_of(j);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_TRUE(mentions(p, "topology"));
  EXPECT_NE(p[0].find("misinfo_fetch"), std::string::npos);
}

TEST(EnvOverrides, ScalarLeavesByPath) {
  EnvGuard a("LIVEK_DRIFT_MIN_COUNT", "12");
  EnvGuard b("LIVEK_KEYWORDS_MATCH_MODE", "substring");
  EnvGuard c("LIVEK_SEED", "99");
  EnvGuard d("LIVEK_OUTPUT_ENRICHED_ARCHIVE", "false");
  auto cfg = PipelineConfig::from_json(fixture_config(), kData / "fixture");
  EXPECT_EQ(cfg.promotion.min_count, 12u);
  EXPECT_EQ(cfg.match_mode, MatchMode::substring);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_FALSE(cfg.write_enriched);
}

TEST(EnvOverrides, UnparsableValueIsValidationError) {
  EnvGuard a("LIVEK_DRIFT_MIN_COUNT", "many");
  EXPECT_THROW(PipelineConfig::from_json(fixture_config(), kData / "fixture"), ValidationError);
}

TEST(EnvOverrides, AppliedNamesReported) {
  EnvGuard a("TESTPFX_A_B", "7");
  nlohmann::json doc = {{"a", {{"b", 1}, {"c", "x"}}}};
  auto applied = apply_env_overrides(doc, "TESTPFX");
  EXPECT_EQ(applied, (std::vector<std::string>{"TESTPFX_A_B"}));
  EXPECT_EQ(doc["a"]["b"], 7);
  EXPECT_EQ(doc["a"]["c"], "x");
}
