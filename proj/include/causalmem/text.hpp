#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace causalmem {

inline constexpr std::string_view kStopwordsVersion = "stopwords-v1";

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Tokenizer shared by retrieval, the hashed embedder, and the support check:
/// lowercase, every non-alphanumeric byte becomes a separator, whitespace split.
/// Stopwords are NOT removed here; callers that want content words filter
/// through is_stopword().
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// Versioned stopword list. Retrieval quality is not the point; being frozen
// and environment-independent is.
inline const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",    "an",   "the",  "is",    "are",  "was",  "were", "be",   "been",
      "of",   "to",   "in",   "on",    "at",   "and",  "or",   "for",  "with",
      "that", "this", "it",   "as",    "by",   "from", "about", "what", "when",
      "where", "who",  "which", "did",  "do",   "does", "has",  "have", "had",
      "will", "would", "not",  "no",   "her",  "his",  "their", "its",  "they",
      "she",  "he",   "we",   "you",   "i",    "my",   "our",  "your", "them",
      "him",  "s",    "t"};
  return words;
}

inline bool is_stopword(const std::string& token) { return stopwords().count(token) > 0; }

inline std::vector<std::string> content_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) {
    if (!is_stopword(t)) out.push_back(std::move(t));
  }
  return out;
}

/// Scoring normalization: lowercase, punctuation stripped, whitespace
/// collapsed. Sentence terminators (. ! ?) are kept as standalone tokens so
/// style constraints can be evaluated on the normalized form — this makes
/// score_det invariant under pre-normalization of its input.
inline std::string normalize_answer(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  auto push = [&](char c) {
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      push(static_cast<char>(std::tolower(c)));
    } else if (c == '.' || c == '!' || c == '?') {
      pending_space = true;
      push(static_cast<char>(c));
      pending_space = true;
    } else {
      pending_space = true;
    }
  }
  return out;
}

/// Normalized substring containment. An empty needle is vacuously contained.
inline bool contains_normalized(std::string_view haystack, std::string_view needle) {
  const std::string n = normalize_answer(needle);
  if (n.empty()) return true;
  return normalize_answer(haystack).find(n) != std::string::npos;
}

/// Word count used for the max_words check: alphanumeric tokens only.
inline std::size_t word_count(std::string_view text) { return tokenize(text).size(); }

// ---- calendar helpers ----

inline const std::array<std::string_view, 12>& month_names() {
  static const std::array<std::string_view, 12> names = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  return names;
}

inline std::optional<int> month_index(std::string_view name) {
  for (int i = 0; i < 12; ++i) {
    if (month_names()[static_cast<std::size_t>(i)] == name) return i;
  }
  return std::nullopt;
}

inline bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

inline std::string make_iso_date(int year, int month1, int day) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month1, day);
  return std::string(buf);
}

/// "2023-05-21" -> "21 May 2023". Returns the input unchanged when it is not
/// an ISO date.
inline std::string iso_to_human(std::string_view iso) {
  if (!is_iso_date(iso)) return std::string(iso);
  const int month = (iso[5] - '0') * 10 + (iso[6] - '0');
  const int day = (iso[8] - '0') * 10 + (iso[9] - '0');
  std::string out = std::to_string(day);
  out += ' ';
  out += month_names()[static_cast<std::size_t>(month - 1)];
  out += ' ';
  out += iso.substr(0, 4);
  return out;
}

}  // namespace causalmem
