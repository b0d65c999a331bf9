#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentirag/classifier.hpp"
#include "sentirag/corpus.hpp"
#include "sentirag/retrieval.hpp"
#include "sentirag/weights.hpp"

namespace sentirag {

inline constexpr double kDefaultNeutralZone = 0.005;
inline constexpr double kDefaultFeedbackRate = 1e-4;

enum class Alignment { Aligned, Misaligned, Skipped };

// |r| <= zone is Skipped. Outside the zone a prediction is Aligned when its
// direction matches the return; Neutral is always Misaligned there.
// InputError for a negative zone or an Unknown prediction.
Alignment judge_alignment(SentimentLabel predicted, double next_day_return, double zone);

// +alpha (Aligned) or -alpha (Misaligned) on each contributing source, then
// clamp every weight to [0, 1], then renormalize. If every weight clamps to
// zero the result is uniform. InputError for alpha <= 0, a Skipped verdict,
// an empty or unknown contributor set.
SourceWeights update_weights(const SourceWeights& weights,
                             std::span<const std::string> contributing, Alignment verdict,
                             double alpha);

enum class FeedbackOutcome {
  Reward,
  Penalize,
  SkippedNeutralZone,
  SkippedUnknown,
  SkippedNoContext,
  SkippedError,
};

std::string_view outcome_name(FeedbackOutcome outcome);

struct FeedbackEvent {
  std::string query_id;
  std::optional<SentimentLabel> predicted;
  std::optional<double> next_day_return;
  std::vector<std::string> contributing_sources;
  FeedbackOutcome outcome = FeedbackOutcome::SkippedUnknown;
};

struct FeedbackParams {
  double alpha = kDefaultFeedbackRate;  // 0 turns the loop into pure evaluation
  double zone = kDefaultNeutralZone;
  std::uint64_t seed = 0;
};

struct FeedbackResult {
  SourceWeights final_weights;
  std::vector<FeedbackEvent> events;              // one per item
  std::vector<PredictionRecord> predictions;      // one per item
  std::vector<std::vector<double>> trajectory;    // initial, then after each item
};

// Sequential pass over time-ordered items: each item is retrieved and
// classified with the current weights, judged against its next-day return
// and, unless skipped, used to update the weights of the sources placed in
// its prompt. InputError when items are not sorted by date.
FeedbackResult run_feedback_epoch(std::span<const TestItem> dataset, const RagPipeline& pipeline,
                                  ClassifierBackend& backend, const SourceWeights& initial,
                                  const FeedbackParams& params);

void write_event_log(const std::string& path, std::span<const FeedbackEvent> events);

// CSV `step,source,weight`; step 0 is the initial vector.
void write_weight_trajectory(const std::string& path, const std::vector<std::string>& sources,
                             const std::vector<std::vector<double>>& trajectory);

}  // namespace sentirag
