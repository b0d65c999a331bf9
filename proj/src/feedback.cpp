#include "sentirag/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "sentirag/error.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

Alignment judge_alignment(SentimentLabel predicted, double next_day_return, double zone) {
  if (!(zone >= 0.0)) throw InputError("neutral zone must be >= 0");
  if (predicted == SentimentLabel::Unknown) throw InputError("cannot judge an Unknown prediction");
  if (std::abs(next_day_return) <= zone) return Alignment::Skipped;
  bool aligned = (predicted == SentimentLabel::Positive && next_day_return > zone) ||
                 (predicted == SentimentLabel::Negative && next_day_return < -zone);
  return aligned ? Alignment::Aligned : Alignment::Misaligned;
}

SourceWeights update_weights(const SourceWeights& weights,
                             std::span<const std::string> contributing, Alignment verdict,
                             double alpha) {
  if (!(alpha > 0.0)) throw InputError("learning rate must be > 0");
  if (verdict == Alignment::Skipped) throw InputError("skipped verdicts carry no update");
  if (contributing.empty()) throw InputError("no contributing sources");
  std::vector<double> w = weights.values();
  std::vector<bool> touched(w.size(), false);
  double delta = verdict == Alignment::Aligned ? alpha : -alpha;
  for (const auto& s : contributing) {
    auto i = weights.index_of(s);
    if (!i) throw InputError(fmt::format("contributing source `{}` is not registered", s));
    if (touched[*i]) continue;
    touched[*i] = true;
    w[*i] += delta;
  }
  double sum = 0.0;
  for (double& x : w) {
    x = std::clamp(x, 0.0, 1.0);
    sum += x;
  }
  if (sum == 0.0) return SourceWeights::uniform(weights.names());
  return SourceWeights::normalized(weights.names(), std::move(w));
}

std::string_view outcome_name(FeedbackOutcome outcome) {
  switch (outcome) {
    case FeedbackOutcome::Reward: return "reward";
    case FeedbackOutcome::Penalize: return "penalize";
    case FeedbackOutcome::SkippedNeutralZone: return "skipped_neutral_zone";
    case FeedbackOutcome::SkippedUnknown: return "skipped_unknown";
    case FeedbackOutcome::SkippedNoContext: return "skipped_no_context";
    case FeedbackOutcome::SkippedError: return "skipped_error";
  }
  return "skipped_error";
}

FeedbackResult run_feedback_epoch(std::span<const TestItem> dataset, const RagPipeline& pipeline,
                                  ClassifierBackend& backend, const SourceWeights& initial,
                                  const FeedbackParams& params) {
  if (params.alpha < 0.0) throw InputError("learning rate must be >= 0");
  for (std::size_t i = 1; i < dataset.size(); ++i)
    if (dataset[i].query.date < dataset[i - 1].query.date)
      throw InputError(fmt::format("feedback dataset not in date order at item `{}`",
                                   dataset[i].query.id));
  FeedbackResult out;
  out.final_weights = initial;
  out.trajectory.push_back(initial.values());
  for (const auto& item : dataset) {
    FeedbackEvent ev;
    ev.query_id = item.query.id;
    ev.next_day_return = item.next_day_return;
    if (item.truth == SentimentLabel::Unknown) {
      PredictionRecord rec;
      rec.query_id = item.query.id;
      rec.truth = item.truth;
      out.predictions.push_back(std::move(rec));
      ev.outcome = FeedbackOutcome::SkippedUnknown;
    } else {
      auto rec = predict_item(item, pipeline, backend, out.final_weights,
                              query_stream(params.seed, item.query.id));
      ev.predicted = rec.predicted;
      ev.contributing_sources = rec.contributing_sources;
      if (!rec.predicted) {
        ev.outcome = FeedbackOutcome::SkippedError;
      } else if (!item.next_day_return) {
        ev.outcome = FeedbackOutcome::SkippedUnknown;  // predicted, but nothing to judge against
      } else {
        auto verdict = judge_alignment(*rec.predicted, *item.next_day_return, params.zone);
        if (verdict == Alignment::Skipped) {
          ev.outcome = FeedbackOutcome::SkippedNeutralZone;
        } else if (ev.contributing_sources.empty()) {
          ev.outcome = FeedbackOutcome::SkippedNoContext;
        } else {
          ev.outcome = verdict == Alignment::Aligned ? FeedbackOutcome::Reward
                                                     : FeedbackOutcome::Penalize;
          if (params.alpha > 0.0)
            out.final_weights =
                update_weights(out.final_weights, ev.contributing_sources, verdict, params.alpha);
        }
      }
      out.predictions.push_back(std::move(rec));
    }
    out.events.push_back(std::move(ev));
    out.trajectory.push_back(out.final_weights.values());
  }
  return out;
}

void write_event_log(const std::string& path, std::span<const FeedbackEvent> events) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path));
  for (const auto& e : events) {
    nlohmann::json j;
    j["query_id"] = e.query_id;
    j["predicted"] = e.predicted ? nlohmann::json(std::string(label_name(*e.predicted)))
                                 : nlohmann::json(nullptr);
    j["next_day_return"] = e.next_day_return ? nlohmann::json(*e.next_day_return)
                                             : nlohmann::json(nullptr);
    j["contributing_sources"] = e.contributing_sources;
    j["outcome"] = std::string(outcome_name(e.outcome));
    out << j.dump() << '\n';
  }
}

void write_weight_trajectory(const std::string& path, const std::vector<std::string>& sources,
                             const std::vector<std::vector<double>>& trajectory) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path));
  out << "step,source,weight\n";
  for (std::size_t step = 0; step < trajectory.size(); ++step)
    for (std::size_t i = 0; i < sources.size(); ++i)
      out << step << ',' << csv_escape(sources[i]) << ',' << fmt::format("{:.17g}", trajectory[step][i])
          << '\n';
}

}  // namespace sentirag
