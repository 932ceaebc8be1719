#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace newslean {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

inline std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Lowercase, delete ASCII punctuation, split on whitespace. Shared by
// embedding training, topic extraction and the backbone stub.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// 64-bit FNV-1a. Stable across platforms, used for bucket hashing and
// config fingerprints.
constexpr std::uint64_t fnv1a64(std::string_view s,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
    v >>= 4;
  }
  return out;
}

inline constexpr std::string_view kStopwordsVersion = "en-2024.1";

// Tokenized forms (apostrophes already removed by tokenize()).
inline const std::unordered_set<std::string>& english_stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",       "about",   "above",  "after",  "again",   "against", "all",
      "am",      "an",      "and",    "any",    "are",     "arent",   "as",
      "at",      "be",      "because", "been",  "before",  "being",   "below",
      "between", "both",    "but",    "by",     "can",     "cannot",  "could",
      "couldnt", "did",     "didnt",  "do",     "does",    "doesnt",  "doing",
      "dont",    "down",    "during", "each",   "few",     "for",     "from",
      "further", "had",     "hadnt",  "has",    "hasnt",   "have",    "havent",
      "having",  "he",      "her",    "here",   "hers",    "herself", "him",
      "himself", "his",     "how",    "i",      "if",      "in",      "into",
      "is",      "isnt",    "it",     "its",    "itself",  "just",    "me",
      "more",    "most",    "my",     "myself", "no",      "nor",     "not",
      "now",     "of",      "off",    "on",     "once",    "only",    "or",
      "other",   "our",     "ours",   "ourselves", "out",  "over",    "own",
      "said",    "same",    "she",    "should", "so",      "some",    "such",
      "than",    "that",    "thats",  "the",    "their",   "theirs",  "them",
      "themselves", "then", "there",  "these",  "they",    "this",    "those",
      "through", "to",      "too",    "under",  "until",   "up",      "very",
      "was",     "wasnt",   "we",     "were",   "werent",  "what",    "when",
      "where",   "which",   "while",  "who",    "whom",    "why",     "will",
      "with",    "wont",    "would",  "you",    "your",    "yours",   "yourself",
      "yourselves", "also", "us",     "im",     "ive",     "youre",   "weve",
      "theyre",  "its",     "may",    "might",  "must",    "shall",   "s",
      "t",       "ll",      "d",      "m",      "o",       "re",      "ve",
      "y"};
  return words;
}

}  // namespace newslean
