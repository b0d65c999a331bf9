#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentirag/corpus.hpp"
#include "sentirag/http.hpp"
#include "sentirag/retrieval.hpp"
#include "sentirag/sentiment.hpp"

namespace sentirag {

struct Prediction {
  SentimentLabel label = SentimentLabel::Neutral;  // never Unknown
  std::string raw_output;
};

// First case-insensitive whole-word occurrence of positive / negative /
// neutral. ParseError when none is present.
SentimentLabel parse_label(std::string_view raw);

struct ClassifyRequest {
  std::string_view prompt;
  const ContextBundle* bundle = nullptr;            // needed by the oracle backend
  SentimentLabel truth = SentimentLabel::Unknown;   // needed by the oracle backend
  std::uint64_t stream = 0;                         // per-query randomness key
};

class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;
  virtual std::string_view name() const = 0;
  // RetryableError for transient remote failures, ParseError for output
  // that maps to no label.
  virtual Prediction classify(const ClassifyRequest& request) = 0;
};

// Counts positive and negative cues in the query sentence of the prompt;
// the larger count wins, ties and silence are Neutral.
class RuleClassifier final : public ClassifierBackend {
 public:
  explicit RuleClassifier(SentimentCueLexicon lexicon = SentimentCueLexicon::default_finance())
      : lexicon_(std::move(lexicon)) {}

  std::string_view name() const override { return "rule"; }
  Prediction classify(const ClassifyRequest& request) override;

 private:
  SentimentCueLexicon lexicon_;
};

// Per-source probability that a prediction keyed to that source is correct.
struct OracleFidelity {
  std::map<std::string, double> per_source;
  double base_rate = 0.5;  // used for empty context and unlisted sources

  // ConfigError when any probability lies outside [0, 1].
  void validate() const;
  double probability(const std::string& source) const;
};

// Synthetic-world classifier: returns the truth with probability p of the
// top-ranked context item's source, otherwise one of the two other labels
// uniformly. Draws come from a stream derived from (seed, request.stream),
// so results do not depend on call order.
Prediction oracle_classify(const OracleFidelity& oracle, std::uint64_t seed,
                           const ContextBundle& bundle, SentimentLabel truth, std::uint64_t stream);

class OracleClassifier final : public ClassifierBackend {
 public:
  OracleClassifier(OracleFidelity fidelity, std::uint64_t seed);

  std::string_view name() const override { return "oracle"; }
  // InputError without a bundle or with an Unknown truth.
  Prediction classify(const ClassifyRequest& request) override;

 private:
  OracleFidelity fidelity_;
  std::uint64_t seed_;
};

// Completion-style endpoint: POST `{"prompt": ...}` -> `{"text": ...}`.
class RemoteClassifier final : public ClassifierBackend {
 public:
  explicit RemoteClassifier(HttpEndpoint endpoint);

  std::string_view name() const override { return "remote"; }
  Prediction classify(const ClassifyRequest& request) override;

 private:
  HttpEndpoint endpoint_;
};

// Everything recorded about one query run through retrieval and a backend.
struct PredictionRecord {
  std::string query_id;
  SentimentLabel truth = SentimentLabel::Unknown;
  std::optional<SentimentLabel> predicted;  // empty on error or skip
  std::string raw_output;
  std::string error;  // "parse: ...", "pipeline: ...", empty on success
  std::string prompt;
  std::vector<std::string> selected_ids;
  std::vector<std::string> contributing_sources;
  std::vector<double> scores;  // weighted scores of the selected items
};

// Stream key for a query id under a run seed and salt (episode, pass...).
std::uint64_t query_stream(std::uint64_t seed, std::string_view query_id, std::uint64_t salt = 0);

// Builds the context bundle with `weights`, classifies it and records the
// outcome. Errors (retrieval or backend) are captured in the record, except
// RetryableError: an endpoint that stays unreachable propagates.
PredictionRecord predict_item(const TestItem& item, const RagPipeline& pipeline,
                              ClassifierBackend& backend, const SourceWeights& weights,
                              std::uint64_t stream);

}  // namespace sentirag
