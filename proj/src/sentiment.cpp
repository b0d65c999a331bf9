#include "sentirag/sentiment.hpp"

#include "sentirag/text.hpp"

namespace sentirag {

std::string_view label_name(SentimentLabel label) {
  switch (label) {
    case SentimentLabel::Positive: return "positive";
    case SentimentLabel::Negative: return "negative";
    case SentimentLabel::Neutral: return "neutral";
    case SentimentLabel::Unknown: return "unknown";
  }
  return "unknown";
}

std::optional<SentimentLabel> label_from_name(std::string_view name) {
  std::string n = to_lower(trim(name));
  if (n == "positive") return SentimentLabel::Positive;
  if (n == "negative") return SentimentLabel::Negative;
  if (n == "neutral") return SentimentLabel::Neutral;
  if (n == "unknown") return SentimentLabel::Unknown;
  return std::nullopt;
}

}  // namespace sentirag
