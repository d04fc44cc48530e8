#include <gtest/gtest.h>

#include <random>

#include "livek/core/text.hpp"
#include "livek/core/time.hpp"

using namespace livek;

TEST(Time, ParsesLegacyArchiveForm) {
  auto t = parse_timestamp("Sat Feb 29 18:59:56 +0000 2020");
  ASSERT_TRUE(t);
  EXPECT_EQ(to_epoch(*t), 1583002796);
}

TEST(Time, ParsesIsoVariants) {
  EXPECT_EQ(to_epoch(*parse_timestamp("2020-02-29T18:59:56Z")), 1583002796);
  EXPECT_EQ(to_epoch(*parse_timestamp("2020-02-29 18:59:56")), 1583002796);
  EXPECT_EQ(to_epoch(*parse_timestamp("2020-02-29T18:59:56.250Z")), 1583002796);
  EXPECT_EQ(to_epoch(*parse_timestamp("2020-02-29T20:59:56+02:00")), 1583002796);
  EXPECT_EQ(to_epoch(*parse_timestamp("2020-02-29")), 1582934400);
  EXPECT_EQ(to_epoch(*parse_timestamp("1583002796")), 1583002796);
}

TEST(Time, RejectsGarbage) {
  EXPECT_FALSE(parse_timestamp(""));
  EXPECT_FALSE(parse_timestamp("yesterday"));
  EXPECT_FALSE(parse_timestamp("2020-13-01"));
  EXPECT_FALSE(parse_timestamp("2020-02-30"));
  EXPECT_FALSE(parse_timestamp("Sat Fob 29 18:59:56 +0000 2020"));
}

TEST(Time, FormatsRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> d(0, 4102444800);
  for (int i = 0; i < 500; ++i) {
    auto t = from_epoch(d(rng));
    EXPECT_EQ(parse_timestamp(format_iso8601(t)), t);
    EXPECT_EQ(parse_timestamp(format_legacy(t)), t);
  }
  auto t = from_epoch(1583002796);
  EXPECT_EQ(format_iso8601(t), "2020-02-29T18:59:56Z");
  EXPECT_EQ(format_legacy(t), "Sat Feb 29 18:59:56 +0000 2020");
  EXPECT_EQ(format_day(t), "2020-02-29");
  EXPECT_EQ(format_month(t), "2020-02");
}

TEST(Time, FloorHandlesNegativeTimes) {
  EXPECT_EQ(to_epoch(floor_to(from_epoch(125), Duration(60))), 120);
  EXPECT_EQ(to_epoch(floor_to(from_epoch(-1), Duration(60))), -60);
  EXPECT_EQ(to_epoch(floor_to(from_epoch(-60), Duration(60))), -60);
}

TEST(Text, NormalizesCaseAndWhitespace) {
  EXPECT_EQ(normalize_term("  Social \t  DISTANCING \n"), "social distancing");
  EXPECT_EQ(collapse_whitespace("a  b\n\nc "), "a b c");
  EXPECT_EQ(to_lower_ascii("COVID-19 新型"), "covid-19 新型");
}

TEST(Text, TokenizeKeepsJoinedWords) {
  auto t = tokenize("rt @who: covid-19 cases, sars-cov-2! it's");
  std::vector<std::string> want{"rt", "who", "covid-19", "cases", "sars-cov-2", "it's"};
  EXPECT_EQ(t, want);
  EXPECT_EQ(tokenize("a-- -b"), (std::vector<std::string>{"a", "b"}));
}

TEST(Text, WordBoundaries) {
  EXPECT_TRUE(contains_word("the pandemic spreads", "pandemic"));
  EXPECT_FALSE(contains_word("pandemics spread", "pandemic"));
  EXPECT_TRUE(contains_word("stay home, stay safe", "stay safe"));
  EXPECT_TRUE(contains_word_prefix("three deaths today", "death"));
  EXPECT_FALSE(contains_word_prefix("ridiculous", "icu"));
  EXPECT_EQ(count_word("bad bad, worse bad", "bad"), 3u);
  EXPECT_EQ(count_word("badly bad", "bad"), 1u);
}

TEST(Text, Utf8Validation) {
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("新型冠状病毒"));
  EXPECT_FALSE(is_valid_utf8("\xff\xfe"));
  EXPECT_FALSE(is_valid_utf8("\xe6\x96"));
}
