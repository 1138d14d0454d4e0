#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"
#include "emoquad/jsonl.hpp"
#include "emoquad/labeler.hpp"
#include "emoquad/rng.hpp"

// Generator for labeled toy corpora with known structure. Each class draws
// from its own keyword pool plus shared filler words; a fraction of tokens
// are noise words taken from the other classes' pools.

namespace emoquad::synthetic {

struct CorpusSpec {
  std::size_t per_class = 10;
  double noise_rate = 0.1;
  std::size_t min_tokens = 5;
  std::size_t max_tokens = 12;
  double filler_rate = 0.4;     // share of non-noise tokens drawn from filler
  double decoration_rate = 0.2; // chance of a mention / URL / emoticon
  std::uint64_t seed = 7;
};

inline const std::array<std::vector<std::string>, kNumClasses>& keyword_pools() {
  static const std::array<std::vector<std::string>, kNumClasses> pools = {{
      {"party", "won", "dance", "concert", "celebrate", "goal", "promotion", "festival", "victory", "adventure",
       "rollercoaster", "jackpot"},
      {"tea", "blanket", "garden", "nap", "sunset", "reading", "breeze", "hammock", "meditate", "cozy", "beach",
       "candle"},
      {"deadline", "traffic", "exam", "argument", "panic", "overdue", "fight", "alarm", "shouting", "crash",
       "interview", "rush"},
      {"rain", "alone", "funeral", "lost", "empty", "rejected", "goodbye", "grey", "lonely", "failed", "missing",
       "quiet"},
  }};
  return pools;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the", "a", "today", "my", "is", "so", "this", "and", "with", "just", "i", "we",
      "at", "after", "before", "again", "really", "feel", "was", "it"};
  return words;
}

/// Hashtag words (all present in the default seed file) used to tag each class.
inline const std::array<std::vector<std::string>, kNumClasses>& tag_words() {
  static const std::array<std::vector<std::string>, kNumClasses> tags = {{
      {"excited", "happy", "elated", "joyful"},
      {"calm", "relaxed", "content", "peaceful"},
      {"nervous", "angry", "stressed", "afraid"},
      {"sad", "depressed", "disappointed", "nohope"},
  }};
  return tags;
}

/// Seeds covering the tag words, for tests that do not read data files.
inline SeedMap tag_seed_map() {
  SeedMap seeds;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    for (const auto& w : tag_words()[c]) seeds.emplace(w, class_at(c));
  }
  return seeds;
}

namespace detail {

inline const std::string& pick(const std::vector<std::string>& v, Rng& rng) { return v[rng.below(v.size())]; }

}  // namespace detail

/// Labeled tweets, class-interleaved, each ending in one or two hashtags of
/// its class. Emoticons, when present, agree with the class polarity.
inline std::vector<LabeledTweet> make_corpus(const CorpusSpec& spec, const std::string& id_prefix = "s") {
  Rng rng(spec.seed);
  const auto& pools = keyword_pools();
  std::vector<LabeledTweet> out;
  out.reserve(spec.per_class * kNumClasses);
  for (std::size_t n = 0; n < spec.per_class; ++n) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const EmotionClass cls = class_at(c);
      const std::size_t len = spec.min_tokens + rng.below(spec.max_tokens - spec.min_tokens + 1);
      std::string text;
      auto append = [&](const std::string& w) {
        if (!text.empty()) text.push_back(' ');
        text += w;
      };
      if (rng.uniform() < spec.decoration_rate) append("@friend" + std::to_string(rng.below(100)));
      for (std::size_t k = 0; k < len; ++k) {
        if (rng.uniform() < spec.noise_rate) {
          std::size_t other = rng.below(kNumClasses - 1);
          if (other >= c) ++other;
          append(detail::pick(pools[other], rng));
        } else if (rng.uniform() < spec.filler_rate) {
          append(detail::pick(filler_words(), rng));
        } else {
          append(detail::pick(pools[c], rng));
        }
      }
      if (rng.uniform() < spec.decoration_rate) append("https://t.co/x" + std::to_string(rng.below(1000)));
      if (rng.uniform() < spec.decoration_rate) {
        append(polarity_of_class(cls) == Polarity::Positive ? ":)" : ":(");
      }
      const auto& tags = tag_words()[c];
      append("#" + detail::pick(tags, rng));
      if (rng.uniform() < 0.3) append("#" + detail::pick(tags, rng));
      Tweet t{id_prefix + std::to_string(out.size()), text};
      out.push_back(LabeledTweet{std::move(t), cls, {}});
    }
  }
  return out;
}

/// Raw tweets that the labeler must reject, one per rejection bucket, cycled.
inline std::vector<Tweet> make_rejects(std::size_t count, std::uint64_t seed, const std::string& id_prefix = "r") {
  Rng rng(seed);
  const auto& tags = tag_words();
  std::vector<Tweet> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string text;
    switch (i % 5) {
      case 0: text = "nothing tagged here at all"; break;
      case 1: text = "#" + detail::pick(tags[0], rng) + " in the middle of a sentence"; break;
      case 2: text = "mixed signals today #" + detail::pick(tags[0], rng) + " #" + detail::pick(tags[2], rng); break;
      case 3: text = "first match :) and final exam :( #" + detail::pick(tags[1], rng); break;
      default: text = "leaving this planet now :) #" + detail::pick(tags[3], rng); break;
    }
    out.push_back(Tweet{id_prefix + std::to_string(i), text});
  }
  return out;
}

struct PipelineSpec {
  std::size_t train_per_class = 500;
  std::size_t test_per_class = 100;
  std::size_t rejects = 50;
  std::size_t dim = 200;
  double noise_rate = 0.1;
  std::uint64_t seed = 7;
};

struct PipelineFiles {
  std::filesystem::path raw;         // unlabeled tweets plus rejects
  std::filesystem::path test;        // labeled held-out tweets
  std::filesystem::path embeddings;  // vectors for every other training word
  std::size_t raw_count = 0;
  std::size_t test_count = 0;
};

/// Writes raw.jsonl, test.jsonl and embeddings.txt under `dir`.
inline PipelineFiles write_pipeline_files(const std::filesystem::path& dir, const PipelineSpec& p) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  PipelineFiles files{dir / "raw.jsonl", dir / "test.jsonl", dir / "embeddings.txt"};

  CorpusSpec spec;
  spec.noise_rate = p.noise_rate;
  spec.per_class = p.train_per_class;
  spec.seed = p.seed;
  const auto train = make_corpus(spec, "t");
  spec.per_class = p.test_per_class;
  spec.seed = p.seed + 1;
  const auto test = make_corpus(spec, "e");
  const auto bad = make_rejects(p.rejects, p.seed + 2);

  std::ofstream raw(files.raw);
  for (const auto& lt : train) raw << nlohmann::json{{"id", lt.tweet.id}, {"text", lt.tweet.text}}.dump() << '\n';
  for (const auto& t : bad) raw << nlohmann::json{{"id", t.id}, {"text", t.text}}.dump() << '\n';
  files.raw_count = train.size() + bad.size();

  std::ofstream test_out(files.test);
  for (const auto& lt : test) write_labeled_line(test_out, lt.tweet, lt.label);
  files.test_count = test.size();

  // Every other word gets a vector, so both file hits and random fallbacks occur.
  std::set<std::string> words;
  for (const auto& lt : train) {
    for (auto& w : preprocess(lt.tweet.text)) words.insert(std::move(w));
  }
  Rng rng(p.seed + 3);
  std::ofstream emb(files.embeddings);
  std::size_t k = 0;
  for (const auto& w : words) {
    if (k++ % 2 == 1) continue;
    emb << w;
    for (std::size_t d = 0; d < p.dim; ++d) emb << ' ' << rng.uniform(-0.5, 0.5);
    emb << '\n';
  }
  if (!raw || !test_out || !emb) throw DataError("failed writing synthetic files under '" + dir.string() + "'");
  return files;
}

}  // namespace emoquad::synthetic
