#include "sentirag/metrics.hpp"

#include "sentirag/error.hpp"

namespace sentirag {

void ConfusionMatrix::add(SentimentLabel truth, std::optional<SentimentLabel> predicted) {
  int t = label_index(truth);
  int p = predicted ? label_index(*predicted) : -1;
  if (t < 0 || p < 0) {
    ++excluded;
    return;
  }
  ++counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts)
    for (auto c : row) n += c;
  return n;
}

std::size_t ConfusionMatrix::trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

ConfusionMatrix confusion_from_records(std::span<const PredictionRecord> records) {
  ConfusionMatrix cm;
  for (const auto& r : records) cm.add(r.truth, r.predicted);
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  std::size_t n = cm.total();
  if (n == 0) throw InputError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

std::array<double, 3> per_class_f1(const ConfusionMatrix& cm) {
  std::array<double, 3> f1{};
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t tp = cm.counts[c][c];
    std::size_t actual = 0, predicted = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      actual += cm.counts[c][j];
      predicted += cm.counts[j][c];
    }
    // 2PR/(P+R) simplifies to 2TP/(actual+predicted); zero when TP is zero.
    if (tp > 0)
      f1[c] = 2.0 * static_cast<double>(tp) / static_cast<double>(actual + predicted);
  }
  return f1;
}

double weighted_f1(const ConfusionMatrix& cm) {
  std::size_t n = cm.total();
  if (n == 0) throw InputError("weighted F1 of an empty confusion matrix");
  auto f1 = per_class_f1(cm);
  double out = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t support = cm.counts[c][0] + cm.counts[c][1] + cm.counts[c][2];
    out += static_cast<double>(support) / static_cast<double>(n) * f1[c];
  }
  return out;
}

}  // namespace sentirag
