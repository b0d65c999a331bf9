#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>

#include "sentirag/classifier.hpp"
#include "sentirag/sentiment.hpp"

namespace sentirag {

// Rows are truth, columns prediction, both in label_index order
// (positive, negative, neutral).
struct ConfusionMatrix {
  std::array<std::array<std::size_t, 3>, 3> counts{};
  std::size_t excluded = 0;  // Unknown truth, failed or unparsable predictions

  // Counts the pair, or bumps `excluded` when either side is unusable.
  void add(SentimentLabel truth, std::optional<SentimentLabel> predicted);

  std::size_t total() const;
  std::size_t trace() const;
};

ConfusionMatrix confusion_from_records(std::span<const PredictionRecord> records);

// Correct / total. InputError on an empty matrix.
double accuracy(const ConfusionMatrix& cm);

// F1 per class; a class with no true and no predicted members scores 0.
std::array<double, 3> per_class_f1(const ConfusionMatrix& cm);

// Support-weighted mean of the per-class F1. InputError on an empty matrix.
double weighted_f1(const ConfusionMatrix& cm);

}  // namespace sentirag
