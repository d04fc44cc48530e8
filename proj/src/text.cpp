#include "livek/core/text.hpp"

#include <cstdint>

namespace livek {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_joiner(char c) { return c == '-' || c == '_' || c == '\''; }

}  // namespace

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize_term(std::string_view s) {
  return collapse_whitespace(to_lower_ascii(s));
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  const auto n = s.size();
  while (i < n) {
    auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
        (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += len;
  }
  return true;
}

bool is_token_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || u >= 0x80;
}

std::vector<std::string> tokenize(std::string_view lowered) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const auto n = lowered.size();
  while (i < n) {
    while (i < n && !is_token_char(lowered[i])) ++i;
    if (i >= n) break;
    std::size_t start = i;
    while (i < n) {
      if (is_token_char(lowered[i])) {
        ++i;
      } else if (is_joiner(lowered[i]) && i + 1 < n &&
                 is_token_char(lowered[i + 1])) {
        i += 2;
      } else {
        break;
      }
    }
    tokens.emplace_back(lowered.substr(start, i - start));
  }
  return tokens;
}

namespace {

// Would tokenize() merge the character before `pos` (or from `end`) with
// the match? Joiners bind only between token characters.
bool glued_before(std::string_view text, std::size_t pos) {
  if (pos == 0) return false;
  if (is_token_char(text[pos - 1])) return true;
  return is_joiner(text[pos - 1]) && pos >= 2 && is_token_char(text[pos - 2]);
}

bool glued_after(std::string_view text, std::size_t end) {
  if (end >= text.size()) return false;
  if (is_token_char(text[end])) return true;
  return is_joiner(text[end]) && end + 1 < text.size() && is_token_char(text[end + 1]);
}

template <bool RequireEnd>
bool contains_bounded(std::string_view text, std::string_view term) {
  if (term.empty()) return false;
  std::size_t pos = text.find(term);
  while (pos != std::string_view::npos) {
    bool start_ok = !is_token_char(term.front()) || !glued_before(text, pos);
    bool end_ok = true;
    if constexpr (RequireEnd)
      end_ok = !is_token_char(term.back()) || !glued_after(text, pos + term.size());
    if (start_ok && end_ok) return true;
    pos = text.find(term, pos + 1);
  }
  return false;
}

}  // namespace

bool contains_word(std::string_view text, std::string_view term) {
  return contains_bounded<true>(text, term);
}

bool contains_word_prefix(std::string_view text, std::string_view term) {
  return contains_bounded<false>(text, term);
}

std::size_t count_word(std::string_view text, std::string_view term) {
  if (term.empty()) return 0;
  std::size_t count = 0;
  std::size_t pos = text.find(term);
  while (pos != std::string_view::npos) {
    std::size_t end = pos + term.size();
    bool start_ok = !is_token_char(term.front()) || !glued_before(text, pos);
    bool end_ok = !is_token_char(term.back()) || !glued_after(text, end);
    if (start_ok && end_ok) {
      ++count;
      pos = text.find(term, end);
    } else {
      pos = text.find(term, pos + 1);
    }
  }
  return count;
}

const StopwordSet& default_stopwords() {
  static const StopwordSet words = {
      "the",   "and",   "for",   "are",   "but",   "not",   "you",
      "all",   "any",   "can",   "had",   "her",   "was",   "one",
      "our",   "out",   "day",   "get",   "has",   "him",   "his",
      "how",   "man",   "new",   "now",   "old",   "see",   "two",
      "way",   "who",   "boy",   "did",   "its",   "let",   "put",
      "say",   "she",   "too",   "use",   "that",  "with",  "have",
      "this",  "will",  "your",  "from",  "they",  "know",  "want",
      "been",  "good",  "much",  "some",  "time",  "very",  "when",
      "come",  "here",  "just",  "like",  "long",  "make",  "many",
      "more",  "only",  "over",  "such",  "take",  "than",  "them",
      "well",  "were",  "what",  "into",  "about", "after", "again",
      "also",  "because", "before", "being", "could", "does", "doing",
      "down",  "each",  "even",  "every", "first", "going", "into",
      "most",  "must",  "other", "should", "still", "their", "there",
      "these", "those", "through", "under", "until", "which", "while",
      "would", "yours", "then",  "where", "why",   "amp",   "http",
      "https", "www",   "com",   "via",   "said",  "says",  "today",
      "yesterday", "people", "really", "think", "going", "gonna"};
  return words;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace livek
