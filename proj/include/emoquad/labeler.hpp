#pragma once

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"
#include "emoquad/preprocessor.hpp"

namespace emoquad {

using SeedMap = std::map<std::string, EmotionClass>;
using SynonymTable = std::map<std::string, std::set<std::string>>;

/// Hashtag word (lowercase, no '#') to emotion class. Words are unambiguous.
class HashtagLexicon {
 public:
  HashtagLexicon() = default;

  std::optional<EmotionClass> lookup(std::string_view word) const {
    auto it = entries_.find(detail::ascii_lower(word));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, EmotionClass, std::less<>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  friend HashtagLexicon expand_seed_lexicon(const SeedMap&, const SynonymTable&);
  std::map<std::string, EmotionClass, std::less<>> entries_;
};

namespace detail {

inline void check_lexicon_word(const std::string& w, std::string_view what) {
  bool bad = w.empty() || w.find('#') != std::string::npos ||
             std::any_of(w.begin(), w.end(), is_space) || ascii_lower(w) != w;
  if (bad) {
    throw DataError(std::string(what) + " '" + w + "' must be lowercase, non-empty, without '#' or whitespace");
  }
}

}  // namespace detail

/// Seeds plus every synonym of every seed, inheriting the seed's class. A word
/// reachable with two different classes is dropped entirely.
inline HashtagLexicon expand_seed_lexicon(const SeedMap& seeds, const SynonymTable& synonyms) {
  if (seeds.empty()) throw DataError("empty lexicon");

  std::map<std::string, std::set<EmotionClass>> candidates;
  for (const auto& [word, cls] : seeds) {
    detail::check_lexicon_word(word, "seed word");
    candidates[word].insert(cls);
    auto syn = synonyms.find(word);
    if (syn == synonyms.end()) continue;
    for (const auto& s : syn->second) {
      detail::check_lexicon_word(s, "synonym");
      if (s != word) candidates[s].insert(cls);
    }
  }

  HashtagLexicon lexicon;
  for (const auto& [word, classes] : candidates) {
    if (classes.size() == 1) lexicon.entries_.emplace(word, *classes.begin());
  }
  return lexicon;
}

inline nlohmann::json read_json_file(const std::string& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + std::string(what) + " '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

/// {"happy_active": [...], "happy_inactive": [...], ...}
inline SeedMap seeds_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("seed lexicon must be a JSON object");
  SeedMap seeds;
  for (const auto& [label, words] : j.items()) {
    EmotionClass cls = parse_emotion_class(label);
    if (!words.is_array()) throw DataError("seed list for '" + label + "' must be an array");
    for (const auto& w : words) {
      if (!w.is_string()) throw DataError("seed words for '" + label + "' must be strings");
      std::string word = w.get<std::string>();
      detail::check_lexicon_word(word, "seed word");
      auto [it, inserted] = seeds.emplace(word, cls);
      if (!inserted && it->second != cls) {
        throw DataError("seed word '" + word + "' listed under two classes");
      }
    }
  }
  return seeds;
}

/// {"excited": ["thrilled", ...], ...}
inline SynonymTable synonyms_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("synonym table must be a JSON object");
  SynonymTable table;
  for (const auto& [word, syns] : j.items()) {
    detail::check_lexicon_word(word, "synonym key");
    if (!syns.is_array()) throw DataError("synonyms for '" + word + "' must be an array");
    auto& out = table[word];
    for (const auto& s : syns) {
      if (!s.is_string()) throw DataError("synonyms for '" + word + "' must be strings");
      std::string syn = s.get<std::string>();
      detail::check_lexicon_word(syn, "synonym");
      if (syn != word) out.insert(std::move(syn));
    }
  }
  return table;
}

struct TweetSignals {
  std::set<EmotionClass> classes;
  std::vector<Polarity> polarities;
};

/// Lexicon classes of the raw text's hashtags and the emoticon polarities.
inline TweetSignals classes_in_tweet(std::string_view text, const HashtagLexicon& lexicon,
                                     const EmoticonTable& table) {
  TweetSignals out;
  for (std::string_view tok : detail::split_ws(text)) {
    if (!tok.starts_with('#')) continue;
    if (auto cls = lexicon.lookup(tok.substr(1))) out.classes.insert(*cls);
  }
  out.polarities = scan_emoticons(text, table);
  return out;
}

struct LabelingStats {
  std::size_t input_count = 0;
  std::size_t labeled_count = 0;
  std::size_t rejected_multiclass = 0;
  std::size_t rejected_mixed_emoticon = 0;
  std::size_t rejected_conflict = 0;
  std::size_t rejected_not_trailing = 0;
  std::size_t rejected_no_hashtag = 0;

  std::size_t bucket_total() const {
    return labeled_count + rejected_multiclass + rejected_mixed_emoticon + rejected_conflict +
           rejected_not_trailing + rejected_no_hashtag;
  }

  LabelingStats& operator+=(const LabelingStats& o) {
    input_count += o.input_count;
    labeled_count += o.labeled_count;
    rejected_multiclass += o.rejected_multiclass;
    rejected_mixed_emoticon += o.rejected_mixed_emoticon;
    rejected_conflict += o.rejected_conflict;
    rejected_not_trailing += o.rejected_not_trailing;
    rejected_no_hashtag += o.rejected_no_hashtag;
    return *this;
  }

  bool operator==(const LabelingStats&) const = default;
};

inline nlohmann::json to_json(const LabelingStats& s) {
  return nlohmann::json{{"input_count", s.input_count},
                        {"labeled_count", s.labeled_count},
                        {"rejected_multiclass", s.rejected_multiclass},
                        {"rejected_mixed_emoticon", s.rejected_mixed_emoticon},
                        {"rejected_conflict", s.rejected_conflict},
                        {"rejected_not_trailing", s.rejected_not_trailing},
                        {"rejected_no_hashtag", s.rejected_no_hashtag}};
}

enum class Verdict {
  Labeled,
  NoHashtag,
  NotTrailing,
  Multiclass,
  MixedEmoticon,
  Conflict,
};

struct Decision {
  Verdict verdict = Verdict::NoHashtag;
  EmotionClass label = EmotionClass::HappyActive;  // meaningful only when Labeled
};

/// Applies the weak-labeling rules in order; the first failing rule decides.
inline Decision decide(std::string_view text, const HashtagLexicon& lexicon,
                       const EmoticonTable& table) {
  const auto tokens = detail::split_ws(text);
  std::size_t trailing_start = tokens.size();
  while (trailing_start > 0 && tokens[trailing_start - 1].starts_with('#')) --trailing_start;

  std::set<EmotionClass> classes;
  bool any = false;
  bool all_trailing = true;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].starts_with('#')) continue;
    auto cls = lexicon.lookup(tokens[i].substr(1));
    if (!cls) continue;
    any = true;
    classes.insert(*cls);
    if (i < trailing_start) all_trailing = false;
  }

  if (!any) return {Verdict::NoHashtag};
  if (!all_trailing) return {Verdict::NotTrailing};
  if (classes.size() != 1) return {Verdict::Multiclass};

  const EmotionClass label = *classes.begin();
  const auto polarities = scan_emoticons(text, table);
  bool pos = false;
  bool neg = false;
  for (Polarity p : polarities) (p == Polarity::Positive ? pos : neg) = true;
  if (pos && neg) return {Verdict::MixedEmoticon};
  const Polarity expected = polarity_of_class(label);
  if ((pos && expected != Polarity::Positive) || (neg && expected != Polarity::Negative)) {
    return {Verdict::Conflict};
  }
  return {Verdict::Labeled, label};
}

inline void tally(LabelingStats& stats, Verdict v) {
  ++stats.input_count;
  switch (v) {
    case Verdict::Labeled: ++stats.labeled_count; break;
    case Verdict::NoHashtag: ++stats.rejected_no_hashtag; break;
    case Verdict::NotTrailing: ++stats.rejected_not_trailing; break;
    case Verdict::Multiclass: ++stats.rejected_multiclass; break;
    case Verdict::MixedEmoticon: ++stats.rejected_mixed_emoticon; break;
    case Verdict::Conflict: ++stats.rejected_conflict; break;
  }
}

struct LabelingResult {
  std::vector<LabeledTweet> labeled;
  LabelingStats stats;
};

/// Weak-labels a corpus. Output preserves input order.
inline LabelingResult filter_and_label(const std::vector<Tweet>& corpus,
                                       const HashtagLexicon& lexicon, const EmoticonTable& table) {
  LabelingResult result;
  for (const Tweet& tweet : corpus) {
    const Decision d = decide(tweet.text, lexicon, table);
    tally(result.stats, d.verdict);
    if (d.verdict == Verdict::Labeled) {
      result.labeled.push_back(LabeledTweet{tweet, d.label, preprocess(tweet)});
    }
  }
  if (result.stats.bucket_total() != result.stats.input_count) {
    throw StructuralError("labeling stats do not partition the input");
  }
  return result;
}

}  // namespace emoquad
