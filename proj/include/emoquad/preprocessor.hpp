#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"

namespace emoquad {

inline constexpr std::string_view kUserSentinel = "USERID";
inline constexpr std::string_view kUrlSentinel = "URL";

namespace detail {

constexpr bool is_space(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

constexpr bool is_ascii_alpha(char ch) {
  return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
}

constexpr bool is_ascii_alnum(char ch) { return is_ascii_alpha(ch) || (ch >= '0' && ch <= '9'); }

constexpr char ascii_lower(char ch) {
  return (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](char ch) { return ascii_lower(ch); });
  return out;
}

// Splits on ASCII whitespace; views point into `text`.
inline std::vector<std::string_view> split_ws(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// Lowercases ASCII letters and squeezes runs of 3+ of the same letter
// (case-insensitively) down to 2.
inline std::string squeeze_lower(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  std::size_t run = 0;
  char prev = '\0';
  for (char raw : token) {
    char ch = ascii_lower(raw);
    if (is_ascii_alpha(ch) && ch == prev) {
      ++run;
    } else {
      run = 1;
    }
    prev = ch;
    if (run <= 2 || !is_ascii_alpha(ch)) out.push_back(ch);
  }
  return out;
}

inline bool is_url_form(std::string_view lowered) {
  return lowered.starts_with("http://") || lowered.starts_with("https://") ||
         lowered.starts_with("www.");
}

// Normalizes one whitespace-free token.
inline std::string normalize_token(std::string_view token) {
  if (token == kUserSentinel || token == kUrlSentinel) return std::string(token);
  if (token.starts_with('@')) return std::string(kUserSentinel);
  const std::string lowered = ascii_lower(token);
  std::string squeezed = squeeze_lower(token);
  // Squeezing can turn "htttp://" into a URL prefix; treat either form as a URL
  // so that normalization stays idempotent.
  if (is_url_form(lowered) || is_url_form(squeezed)) return std::string(kUrlSentinel);
  return squeezed;
}

}  // namespace detail

/// Mention and URL replacement, letter squeezing, lowercasing and whitespace
/// collapsing. Non-ASCII bytes pass through untouched.
inline std::string normalize_text(std::string_view text) {
  std::vector<std::string> tokens;
  for (std::string_view tok : detail::split_ws(text)) {
    tokens.push_back(detail::normalize_token(tok));
  }
  return detail::join(tokens);
}

/// Drops the maximal trailing run of '#' tokens. Earlier hashtags keep their
/// word: leading '#' characters are removed and the word is normalized again.
inline std::string strip_hashtags(std::string_view text) {
  auto tokens = detail::split_ws(text);
  std::size_t end = tokens.size();
  while (end > 0 && tokens[end - 1].starts_with('#')) --end;

  std::vector<std::string> kept;
  kept.reserve(end);
  for (std::size_t i = 0; i < end; ++i) {
    std::string_view tok = tokens[i];
    if (!tok.starts_with('#')) {
      kept.emplace_back(tok);
      continue;
    }
    while (tok.starts_with('#')) tok.remove_prefix(1);
    if (tok.empty()) continue;
    kept.push_back(detail::normalize_token(tok));
  }
  return detail::join(kept);
}

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (std::string_view tok : detail::split_ws(text)) out.emplace_back(tok);
  return out;
}

/// Positive and negative emoticon sets. Entries are matched case-insensitively.
class EmoticonTable {
 public:
  EmoticonTable(std::set<std::string> positive, std::set<std::string> negative)
      : positive_(lowered(std::move(positive))), negative_(lowered(std::move(negative))) {
    for (const auto* set : {&positive_, &negative_}) {
      for (const auto& e : *set) {
        if (e.size() < 2 || e.size() > 4) {
          throw DataError("emoticon '" + e + "' must be 2-4 characters");
        }
        if (std::any_of(e.begin(), e.end(), detail::is_space)) {
          throw DataError("emoticon '" + e + "' contains whitespace");
        }
      }
    }
    for (const auto& e : positive_) {
      if (negative_.count(e) != 0) {
        throw DataError("emoticon '" + e + "' is both positive and negative");
      }
    }
  }

  static EmoticonTable defaults() {
    return EmoticonTable({":)", ":-)", ":d", "=)", ";)", ":]"}, {":(", ":-(", ":'(", "d:", ":["});
  }

  static EmoticonTable from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("positive") || !j.contains("negative")) {
      throw DataError("emoticon table needs \"positive\" and \"negative\" arrays");
    }
    for (const auto& [key, _] : j.items()) {
      if (key != "positive" && key != "negative") {
        throw DataError("unknown key '" + key + "' in emoticon table");
      }
    }
    try {
      return EmoticonTable(j.at("positive").get<std::set<std::string>>(),
                           j.at("negative").get<std::set<std::string>>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed emoticon table: ") + e.what());
    }
  }

  static EmoticonTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open emoticon table '" + path + "'");
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path + ": " + e.what());
    }
  }

  const std::set<std::string>& positive() const { return positive_; }
  const std::set<std::string>& negative() const { return negative_; }

  /// Longest entry that equals `lowered_token` or is a suffix of it. A suffix
  /// match only counts for entries that start with punctuation, so "said:"
  /// does not read as the "d:" emoticon while "match:)" reads as ":)".
  std::optional<Polarity> match(std::string_view lowered_token) const {
    std::optional<Polarity> best;
    std::size_t best_len = 0;
    auto consider = [&](const std::set<std::string>& set, Polarity p) {
      for (const auto& e : set) {
        if (e.size() <= best_len || !lowered_token.ends_with(e)) continue;
        if (e.size() != lowered_token.size() && detail::is_ascii_alnum(e.front())) continue;
        best = p;
        best_len = e.size();
      }
    };
    consider(positive_, Polarity::Positive);
    consider(negative_, Polarity::Negative);
    return best;
  }

 private:
  static std::set<std::string> lowered(std::set<std::string> in) {
    std::set<std::string> out;
    for (const auto& s : in) out.insert(detail::ascii_lower(s));
    return out;
  }

  std::set<std::string> positive_;
  std::set<std::string> negative_;
};

/// One polarity per emoticon-bearing token, in text order.
inline std::vector<Polarity> scan_emoticons(std::string_view text, const EmoticonTable& table) {
  std::vector<Polarity> found;
  for (std::string_view tok : detail::split_ws(text)) {
    if (auto p = table.match(detail::ascii_lower(tok))) found.push_back(*p);
  }
  return found;
}

inline std::vector<std::string> preprocess(std::string_view text) {
  return tokenize(strip_hashtags(normalize_text(text)));
}

inline std::vector<std::string> preprocess(const Tweet& tweet) { return preprocess(tweet.text); }

}  // namespace emoquad
