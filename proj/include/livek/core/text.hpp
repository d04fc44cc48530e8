#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace livek {

// ASCII case folding; bytes >= 0x80 pass through untouched so UTF-8
// keywords (Mandarin, Japanese) keep matching byte-for-byte.
std::string to_lower_ascii(std::string_view s);

// Trim and collapse runs of ASCII whitespace to a single space.
std::string collapse_whitespace(std::string_view s);

// Lowercase + collapse_whitespace. Used for keyword terms and locations.
std::string normalize_term(std::string_view s);

bool is_valid_utf8(std::string_view s);

// Token characters: ASCII alphanumerics and any byte >= 0x80. '-', '_'
// and '\'' join two token characters ("covid-19", "sars-cov-2").
bool is_token_char(char c);

// Splits already-lowercased text into tokens.
std::vector<std::string> tokenize(std::string_view lowered);

// `term` occurs in `text` with a token boundary on both sides. Boundaries
// follow tokenize(), so "covid" does not occur in "covid-19".
bool contains_word(std::string_view text, std::string_view term);

// `term` occurs in `text` starting at a token boundary ("death" matches
// "deaths" but "icu" does not match "ridiculous").
bool contains_word_prefix(std::string_view text, std::string_view term);

// Non-overlapping occurrences of `term` bounded like contains_word.
std::size_t count_word(std::string_view text, std::string_view term);

using StopwordSet = std::unordered_set<std::string>;

// Small built-in English list plus stream noise ("rt", "https", "amp").
const StopwordSet& default_stopwords();

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace livek
