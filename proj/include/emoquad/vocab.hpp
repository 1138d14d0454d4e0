#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emoquad/error.hpp"
#include "emoquad/preprocessor.hpp"
#include "emoquad/rng.hpp"
#include "emoquad/tensor.hpp"

namespace emoquad {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;

/// Word to id table. Ids 0 and 1 are reserved for PAD and UNK and have no
/// word; ids 2.. are corpus words by descending frequency.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// `words` in id order starting at id 2.
  Vocabulary(std::vector<std::string> words, std::size_t max_words)
      : words_(std::move(words)), max_words_(max_words) {
    if (words_.size() > max_words_) throw StructuralError("vocabulary exceeds its cap");
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (!index_.emplace(words_[i], i + 2).second) {
        throw DataError("duplicate vocabulary word '" + words_[i] + "'");
      }
    }
  }

  std::size_t size() const { return words_.size() + 2; }
  std::size_t max_words() const { return max_words_; }

  std::size_t id_of(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnkId : it->second;
  }

  bool contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }

  /// Display form; reserved ids render as "<pad>" / "<unk>".
  std::string word_of(std::size_t id) const {
    if (id == kPadId) return "<pad>";
    if (id == kUnkId) return "<unk>";
    return words_.at(id - 2);
  }

  const std::vector<std::string>& words() const { return words_; }

  bool operator==(const Vocabulary& o) const {
    return words_ == o.words_ && max_words_ == o.max_words_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t max_words_ = 1;
};

/// Top `max_words` words by frequency, ties broken lexicographically.
inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                              std::size_t max_words) {
  if (max_words < 1) throw StructuralError("max_words must be at least 1");
  std::map<std::string, std::size_t> freq;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_words) ranked.resize(max_words);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [w, _] : ranked) words.push_back(std::move(w));
  return Vocabulary(std::move(words), max_words);
}

/// Keeps the first `max_len` tokens and right-pads with PAD.
inline std::vector<std::size_t> encode_pad(const std::vector<std::string>& tokens,
                                           const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 1) throw StructuralError("max_len must be at least 1");
  std::vector<std::size_t> ids(max_len, kPadId);
  const std::size_t n = std::min(max_len, tokens.size());
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id_of(tokens[i]);
  return ids;
}

inline constexpr double kEmbeddingInitRange = 0.05;

/// Builds a (vocab size x dim) matrix from a "word f1 ... fdim" text file.
/// Words missing from the file (and UNK) get seeded uniform(-0.05, 0.05)
/// values; the PAD row is zero.
inline Tensor load_embedding_matrix(std::istream& in, const std::string& name,
                                    const Vocabulary& vocab, std::size_t dim,
                                    std::uint64_t rng_seed) {
  if (dim < 1) throw StructuralError("embedding dim must be at least 1");
  Tensor matrix({vocab.size(), dim});
  std::vector<bool> found(vocab.size(), false);

  std::string line;
  std::size_t lineno = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() - 1 != dim) {
      throw DataError(name, lineno,
                      "expected " + std::to_string(dim) + " values, found " +
                          std::to_string(fields.size() - 1));
    }
    const std::size_t id = vocab.id_of(fields[0]);
    if (id == kUnkId || found[id]) continue;
    values.clear();
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(fields[k].data(), fields[k].data() + fields[k].size(), v);
      if (ec != std::errc() || ptr != fields[k].data() + fields[k].size() || !std::isfinite(v)) {
        throw DataError(name, lineno, "bad float '" + std::string(fields[k]) + "'");
      }
      values.push_back(v);
    }
    std::copy(values.begin(), values.end(), matrix.row(id).begin());
    found[id] = true;
  }
  if (in.bad()) throw DataError("read error in '" + name + "'");

  Rng rng(rng_seed);
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    if (found[id]) continue;
    for (double& v : matrix.row(id)) v = rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
  }
  return matrix;
}

inline Tensor load_embedding_matrix(const std::string& path, const Vocabulary& vocab,
                                    std::size_t dim, std::uint64_t rng_seed) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file '" + path + "'");
  return load_embedding_matrix(in, path, vocab, dim, rng_seed);
}

}  // namespace emoquad
