#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace sentirag {

enum class SentimentLabel { Positive, Negative, Neutral, Unknown };

inline constexpr std::array<SentimentLabel, 3> kKnownLabels = {
    SentimentLabel::Positive, SentimentLabel::Negative, SentimentLabel::Neutral};

// Lowercase wire name: "positive", "negative", "neutral", "unknown".
std::string_view label_name(SentimentLabel label);

// Inverse of label_name (case-insensitive); nullopt when unrecognized.
std::optional<SentimentLabel> label_from_name(std::string_view name);

// Row/column index in a 3x3 confusion matrix; Unknown has no index.
inline int label_index(SentimentLabel label) {
  switch (label) {
    case SentimentLabel::Positive: return 0;
    case SentimentLabel::Negative: return 1;
    case SentimentLabel::Neutral: return 2;
    case SentimentLabel::Unknown: break;
  }
  return -1;
}

}  // namespace sentirag
