#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"

namespace emoquad {

/// A corpus row as it appears in JSON Lines files. `label` is absent for
/// unlabeled input.
struct CorpusRecord {
  Tweet tweet;
  std::optional<EmotionClass> label;
};

/// Reads {"id":..., "text":..., ["label":...]} lines. Blank lines are skipped.
/// Ids must be non-empty strings and unique within the file.
inline std::vector<CorpusRecord> read_corpus(std::istream& in, const std::string& name) {
  std::vector<CorpusRecord> rows;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(name, lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError(name, lineno, "record must be a JSON object");
    auto id = j.find("id");
    auto text = j.find("text");
    if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
      throw DataError(name, lineno, "record needs a non-empty string \"id\"");
    }
    if (text == j.end() || !text->is_string()) {
      throw DataError(name, lineno, "record needs a string \"text\"");
    }
    CorpusRecord rec{{id->get<std::string>(), text->get<std::string>()}, std::nullopt};
    if (!seen.insert(rec.tweet.id).second) {
      throw DataError(name, lineno, "duplicate id '" + rec.tweet.id + "'");
    }
    if (auto label = j.find("label"); label != j.end() && !label->is_null()) {
      if (!label->is_string()) throw DataError(name, lineno, "\"label\" must be a string");
      try {
        rec.label = parse_emotion_class(label->get<std::string>());
      } catch (const DataError& e) {
        throw DataError(name, lineno, e.what());
      }
    }
    rows.push_back(std::move(rec));
  }
  return rows;
}

inline std::vector<CorpusRecord> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus '" + path + "'");
  return read_corpus(in, path);
}

/// Every row must carry a label; the error lists the offending ids.
inline std::vector<LabeledTweet> require_labels(const std::vector<CorpusRecord>& rows,
                                                const std::string& name) {
  std::vector<LabeledTweet> out;
  std::vector<std::string> missing;
  for (const auto& r : rows) {
    if (r.label) {
      out.push_back(LabeledTweet{r.tweet, *r.label, {}});
    } else {
      missing.push_back(r.tweet.id);
    }
  }
  if (!missing.empty()) {
    std::string msg = name + ": unlabeled rows:";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }
  return out;
}

inline void write_labeled_line(std::ostream& out, const Tweet& tweet, EmotionClass label) {
  nlohmann::json j{{"id", tweet.id}, {"text", tweet.text}, {"label", to_string(label)}};
  out << j.dump() << '\n';
}

}  // namespace emoquad
