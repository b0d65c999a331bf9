#include "sentirag/classifier.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "sentirag/error.hpp"
#include "sentirag/rng.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

SentimentLabel parse_label(std::string_view raw) {
  for (const auto& tok : word_tokens(raw)) {
    if (tok == "positive") return SentimentLabel::Positive;
    if (tok == "negative") return SentimentLabel::Negative;
    if (tok == "neutral") return SentimentLabel::Neutral;
  }
  std::string shown(raw.substr(0, 80));
  throw ParseError(fmt::format("no sentiment label in output `{}`", shown));
}

Prediction RuleClassifier::classify(const ClassifyRequest& request) {
  if (request.prompt.empty()) throw InputError("empty prompt");
  int pos = 0, neg = 0;
  const auto& p = lexicon_.terms(CuePolarity::Positive);
  const auto& n = lexicon_.terms(CuePolarity::Negative);
  for (const auto& tok : word_tokens(prompt_query(request.prompt))) {
    pos += static_cast<int>(p.count(tok));
    neg += static_cast<int>(n.count(tok));
  }
  SentimentLabel label = pos > neg   ? SentimentLabel::Positive
                         : neg > pos ? SentimentLabel::Negative
                                     : SentimentLabel::Neutral;
  return {label, std::string(label_name(label))};
}

void OracleFidelity::validate() const {
  if (!(base_rate >= 0.0 && base_rate <= 1.0))
    throw ConfigError(fmt::format("oracle base rate {} outside [0,1]", base_rate));
  for (const auto& [s, p] : per_source)
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError(fmt::format("oracle fidelity for `{}` is {} (outside [0,1])", s, p));
}

double OracleFidelity::probability(const std::string& source) const {
  auto it = per_source.find(source);
  return it == per_source.end() ? base_rate : it->second;
}

Prediction oracle_classify(const OracleFidelity& oracle, std::uint64_t seed,
                           const ContextBundle& bundle, SentimentLabel truth,
                           std::uint64_t stream) {
  if (truth == SentimentLabel::Unknown) throw InputError("oracle classifier needs a known truth");
  Rng rng(mix_seed(seed, stream));
  double p = bundle.selected.empty() ? oracle.base_rate
                                     : oracle.probability(bundle.selected.front().item.source);
  SentimentLabel label = truth;
  // Strict `<` so p == 0 never returns the truth and p == 1 always does.
  if (!(rng.uniform() < p)) {
    SentimentLabel others[2];
    int n = 0;
    for (auto l : kKnownLabels)
      if (l != truth) others[n++] = l;
    label = others[rng.index(2)];
  }
  return {label, std::string(label_name(label))};
}

OracleClassifier::OracleClassifier(OracleFidelity fidelity, std::uint64_t seed)
    : fidelity_(std::move(fidelity)), seed_(seed) {
  fidelity_.validate();
}

Prediction OracleClassifier::classify(const ClassifyRequest& request) {
  if (request.bundle == nullptr) throw InputError("oracle classifier needs the context bundle");
  return oracle_classify(fidelity_, seed_, *request.bundle, request.truth, request.stream);
}

RemoteClassifier::RemoteClassifier(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  split_url(endpoint_.url);
}

Prediction RemoteClassifier::classify(const ClassifyRequest& request) {
  if (request.prompt.empty()) throw InputError("empty prompt");
  auto reply = post_json(endpoint_, nlohmann::json{{"prompt", request.prompt}});
  auto it = reply.find("text");
  if (it == reply.end() || !it->is_string())
    throw Error(fmt::format("{}: reply lacks a `text` string", endpoint_.url));
  std::string text = it->get<std::string>();
  return {parse_label(text), text};
}

std::uint64_t query_stream(std::uint64_t seed, std::string_view query_id, std::uint64_t salt) {
  return mix_seed(mix_seed(seed, fnv1a(query_id)), salt);
}

PredictionRecord predict_item(const TestItem& item, const RagPipeline& pipeline,
                              ClassifierBackend& backend, const SourceWeights& weights,
                              std::uint64_t stream) {
  PredictionRecord rec;
  rec.query_id = item.query.id;
  rec.truth = item.truth;
  BuildResult built;
  try {
    built = pipeline.build(item.query, weights);
  } catch (const RetryableError&) {
    throw;  // an unreachable endpoint ends the run
  } catch (const Error& e) {
    rec.error = fmt::format("pipeline: {}", e.what());
    return rec;
  }
  const auto& bundle = built.bundle;
  rec.prompt = bundle.rendered_prompt;
  rec.contributing_sources = bundle.contributing_sources();
  for (const auto& c : bundle.selected) {
    rec.selected_ids.push_back(c.item.id);
    rec.scores.push_back(c.weighted_score);
  }
  try {
    auto pred = backend.classify({bundle.rendered_prompt, &bundle, item.truth, stream});
    rec.predicted = pred.label;
    rec.raw_output = std::move(pred.raw_output);
  } catch (const RetryableError&) {
    throw;
  } catch (const ParseError& e) {
    rec.error = fmt::format("parse: {}", e.what());
  } catch (const Error& e) {
    rec.error = fmt::format("backend: {}", e.what());
  }
  return rec;
}

}  // namespace sentirag
