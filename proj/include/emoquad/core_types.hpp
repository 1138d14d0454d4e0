#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "emoquad/error.hpp"

namespace emoquad {

/// The four valence-arousal quadrants. Declaration order is the row/column
/// order of every confusion matrix and the argmax tie-break order.
enum class EmotionClass : int {
  HappyActive = 0,
  HappyInactive = 1,
  UnhappyActive = 2,
  UnhappyInactive = 3,
};

inline constexpr std::size_t kNumClasses = 4;

inline constexpr std::array<EmotionClass, kNumClasses> kAllClasses = {
    EmotionClass::HappyActive, EmotionClass::HappyInactive,
    EmotionClass::UnhappyActive, EmotionClass::UnhappyInactive};

enum class Polarity { Positive, Negative };

enum class Sign { Plus, Minus };

constexpr std::size_t index_of(EmotionClass c) { return static_cast<std::size_t>(c); }

inline EmotionClass class_at(std::size_t index) {
  if (index >= kNumClasses) {
    throw StructuralError("class index out of range: " + std::to_string(index));
  }
  return kAllClasses[index];
}

constexpr std::string_view to_string(EmotionClass c) {
  switch (c) {
    case EmotionClass::HappyActive: return "happy_active";
    case EmotionClass::HappyInactive: return "happy_inactive";
    case EmotionClass::UnhappyActive: return "unhappy_active";
    case EmotionClass::UnhappyInactive: return "unhappy_inactive";
  }
  return "";
}

constexpr std::string_view to_string(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

/// Parses a canonical label. Unknown strings are an error, never a default.
inline EmotionClass parse_emotion_class(std::string_view s) {
  for (EmotionClass c : kAllClasses) {
    if (to_string(c) == s) return c;
  }
  throw DataError("unknown emotion class label '" + std::string(s) + "'");
}

/// Valence picks Happy/Unhappy, arousal picks Active/Inactive.
constexpr EmotionClass quadrant_of(Sign valence, Sign arousal) {
  if (valence == Sign::Plus) {
    return arousal == Sign::Plus ? EmotionClass::HappyActive : EmotionClass::HappyInactive;
  }
  return arousal == Sign::Plus ? EmotionClass::UnhappyActive : EmotionClass::UnhappyInactive;
}

constexpr Polarity polarity_of_class(EmotionClass c) {
  return (c == EmotionClass::HappyActive || c == EmotionClass::HappyInactive)
             ? Polarity::Positive
             : Polarity::Negative;
}

struct Tweet {
  std::string id;
  std::string text;
};

struct LabeledTweet {
  Tweet tweet;
  EmotionClass label = EmotionClass::HappyActive;
  std::vector<std::string> clean_tokens;
};

}  // namespace emoquad
