#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/core_types.hpp"
#include "emoquad/error.hpp"
#include "emoquad/nn.hpp"
#include "emoquad/trainer.hpp"

namespace emoquad {

using ClassGrid = std::array<std::array<double, kNumClasses>, kNumClasses>;

/// Rows are gold classes, columns predicted classes.
class ConfusionMatrix {
 public:
  std::size_t& at(EmotionClass gold, EmotionClass pred) { return counts_[index_of(gold)][index_of(pred)]; }
  std::size_t at(EmotionClass gold, EmotionClass pred) const { return counts_[index_of(gold)][index_of(pred)]; }
  std::size_t cell(std::size_t gold, std::size_t pred) const { return counts_[gold][pred]; }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts_) {
      for (std::size_t v : row) n += v;
    }
    return n;
  }

  std::size_t row_sum(std::size_t gold) const {
    std::size_t n = 0;
    for (std::size_t v : counts_[gold]) n += v;
    return n;
  }

  std::size_t column_sum(std::size_t pred) const {
    std::size_t n = 0;
    for (const auto& row : counts_) n += row[pred];
    return n;
  }

  std::size_t trace() const {
    std::size_t n = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) n += counts_[k][k];
    return n;
  }

  /// Each row divided by its sum; rows with no gold examples stay zero.
  ClassGrid normalized() const {
    ClassGrid out{};
    for (std::size_t g = 0; g < kNumClasses; ++g) {
      const std::size_t n = row_sum(g);
      if (n == 0) continue;
      for (std::size_t p = 0; p < kNumClasses; ++p) {
        out[g][p] = static_cast<double>(counts_[g][p]) / static_cast<double>(n);
      }
    }
    return out;
  }

  std::array<bool, kNumClasses> empty_rows() const {
    std::array<bool, kNumClasses> out{};
    for (std::size_t g = 0; g < kNumClasses; ++g) out[g] = row_sum(g) == 0;
    return out;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts_{};
};

inline ConfusionMatrix accumulate(std::span<const EmotionClass> preds, std::span<const EmotionClass> golds) {
  if (preds.size() != golds.size()) {
    throw DataError("prediction count " + std::to_string(preds.size()) + " does not match gold count " +
                    std::to_string(golds.size()));
  }
  if (preds.empty()) throw DataError("nothing to evaluate");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < preds.size(); ++i) ++m.at(golds[i], preds[i]);
  return m;
}

/// Fractions in [0, 1]. A zero denominator gives 0 and sets the flag.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f_undefined = false;

  bool operator==(const ClassMetrics&) const = default;
};

inline double f_measure(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

inline std::array<ClassMetrics, kNumClasses> per_class_metrics(const ConfusionMatrix& m) {
  std::array<ClassMetrics, kNumClasses> out{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    ClassMetrics& cm = out[c];
    const auto tp = static_cast<double>(m.cell(c, c));
    const std::size_t predicted = m.column_sum(c);
    const std::size_t actual = m.row_sum(c);
    if (predicted == 0) {
      cm.precision_undefined = true;
    } else {
      cm.precision = tp / static_cast<double>(predicted);
    }
    if (actual == 0) {
      cm.recall_undefined = true;
    } else {
      cm.recall = tp / static_cast<double>(actual);
    }
    cm.f_undefined = cm.precision + cm.recall == 0.0;
    cm.f = f_measure(cm.precision, cm.recall);
  }
  return out;
}

/// Metrics as percentages.
struct Report {
  std::array<ClassMetrics, kNumClasses> per_class{};  // values scaled to [0, 100]
  double accuracy = 0.0;
  double macro_f = 0.0;
  std::size_t count = 0;
  ConfusionMatrix matrix;
  ClassGrid normalized{};
  std::array<bool, kNumClasses> empty_rows{};
};

inline Report make_report(const ConfusionMatrix& m) {
  Report r;
  r.matrix = m;
  r.count = m.total();
  r.normalized = m.normalized();
  r.empty_rows = m.empty_rows();
  r.per_class = per_class_metrics(m);
  double f_sum = 0.0;
  for (auto& cm : r.per_class) {
    cm.precision *= 100.0;
    cm.recall *= 100.0;
    cm.f *= 100.0;
    f_sum += cm.f;
  }
  r.macro_f = f_sum / static_cast<double>(kNumClasses);
  r.accuracy = r.count == 0 ? 0.0 : 100.0 * static_cast<double>(m.trace()) / static_cast<double>(r.count);
  return r;
}

inline double round1(double v) { return std::round(v * 10.0) / 10.0; }

struct Evaluation {
  Report report;
  std::vector<EmotionClass> predictions;
};

/// Eval-mode predictions for labeled rows, using the model's own vocabulary
/// and sequence length.
inline Evaluation evaluate(const ModelState& model, const std::vector<LabeledTweet>& test) {
  Evaluation ev;
  std::vector<EmotionClass> golds;
  ev.predictions.reserve(test.size());
  golds.reserve(test.size());
  for (const auto& row : test) {
    ev.predictions.push_back(model.predict(row.tweet.text));
    golds.push_back(row.label);
  }
  ev.report = make_report(accumulate(ev.predictions, golds));
  return ev;
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    classes[std::string(to_string(class_at(c)))] = {
        {"precision", round1(m.precision)},       {"recall", round1(m.recall)},
        {"f_measure", round1(m.f)},               {"precision_undefined", m.precision_undefined},
        {"recall_undefined", m.recall_undefined}, {"support", r.matrix.row_sum(c)}};
  }
  nlohmann::json raw = nlohmann::json::array();
  nlohmann::json norm = nlohmann::json::array();
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    nlohmann::json raw_row = nlohmann::json::array();
    nlohmann::json norm_row = nlohmann::json::array();
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      raw_row.push_back(r.matrix.cell(g, p));
      norm_row.push_back(r.normalized[g][p]);
    }
    raw.push_back(raw_row);
    norm.push_back(norm_row);
  }
  nlohmann::json labels = nlohmann::json::array();
  nlohmann::json empty = nlohmann::json::array();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    labels.push_back(std::string(to_string(class_at(c))));
    if (r.empty_rows[c]) empty.push_back(std::string(to_string(class_at(c))));
  }
  return {{"count", r.count},
          {"accuracy", round1(r.accuracy)},
          {"macro_f", round1(r.macro_f)},
          {"classes", classes},
          {"labels", labels},
          {"confusion_matrix", raw},
          {"confusion_matrix_normalized", norm},
          {"empty_gold_rows", empty}};
}

namespace detail {

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

inline std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace detail

/// Human-readable table: per-class Prec./Rec./FM, averages, and both matrices.
inline std::string format_report(const Report& r) {
  std::ostringstream os;
  os << detail::pad_right("class", 18) << detail::pad_left("Prec.", 8) << detail::pad_left("Rec.", 8)
     << detail::pad_left("FM", 8) << detail::pad_left("support", 9) << '\n';
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& m = r.per_class[c];
    os << detail::pad_right(std::string(to_string(class_at(c))), 18)
       << detail::pad_left(detail::fixed(round1(m.precision), 1) + (m.precision_undefined ? "*" : ""), 8)
       << detail::pad_left(detail::fixed(round1(m.recall), 1) + (m.recall_undefined ? "*" : ""), 8)
       << detail::pad_left(detail::fixed(round1(m.f), 1), 8)
       << detail::pad_left(std::to_string(r.matrix.row_sum(c)), 9) << '\n';
  }
  os << "\nexamples: " << r.count << '\n'
     << "accuracy: " << detail::fixed(round1(r.accuracy), 1) << "%\n"
     << "macro-F:  " << detail::fixed(round1(r.macro_f), 1) << "%\n";

  auto matrix = [&](const char* title, auto cell) {
    os << '\n' << title << " (rows = gold, columns = predicted)\n" << detail::pad_right("", 18);
    for (std::size_t p = 0; p < kNumClasses; ++p) os << detail::pad_left(std::string(to_string(class_at(p))), 18);
    os << '\n';
    for (std::size_t g = 0; g < kNumClasses; ++g) {
      os << detail::pad_right(std::string(to_string(class_at(g))), 18);
      for (std::size_t p = 0; p < kNumClasses; ++p) os << detail::pad_left(cell(g, p), 18);
      os << (r.empty_rows[g] ? "  (no gold examples)" : "") << '\n';
    }
  };
  matrix("confusion matrix", [&](std::size_t g, std::size_t p) { return std::to_string(r.matrix.cell(g, p)); });
  matrix("normalized confusion matrix",
         [&](std::size_t g, std::size_t p) { return detail::fixed(r.normalized[g][p], 2); });
  bool any_flag = false;
  for (const auto& m : r.per_class) any_flag = any_flag || m.precision_undefined || m.recall_undefined;
  if (any_flag) os << "\n* undefined (zero denominator), reported as 0\n";
  return os.str();
}

/// "matrix,gold,<4 predicted labels>" rows: raw counts, then normalized rows.
inline std::string matrix_csv(const Report& r) {
  std::ostringstream os;
  os << "matrix,gold";
  for (EmotionClass c : kAllClasses) os << ',' << to_string(c);
  os << '\n';
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    os << "raw," << to_string(class_at(g));
    for (std::size_t p = 0; p < kNumClasses; ++p) os << ',' << r.matrix.cell(g, p);
    os << '\n';
  }
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    os << "normalized," << to_string(class_at(g));
    for (std::size_t p = 0; p < kNumClasses; ++p) os << ',' << detail::fixed(r.normalized[g][p], 6);
    os << '\n';
  }
  return os.str();
}

}  // namespace emoquad
