#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentirag/corpus.hpp"
#include "sentirag/embedding.hpp"
#include "sentirag/marketdata.hpp"
#include "sentirag/text.hpp"
#include "sentirag/weights.hpp"

namespace sentirag {

enum class CuePolarity { Positive, Negative, Neutral };

// Polarity cue words matched against lowercased word tokens.
class SentimentCueLexicon {
 public:
  SentimentCueLexicon() = default;
  // Throws ConfigError when the sets overlap.
  SentimentCueLexicon(std::set<std::string> positive, std::set<std::string> negative,
                      std::set<std::string> neutral);

  static SentimentCueLexicon default_finance();
  // Reads comma-separated `positive`, `negative`, `neutral` lists from
  // `[cues]` entries; missing lists fall back to the defaults.
  static SentimentCueLexicon from_config(const KeyValueDoc& doc);

  // Distinct polarities whose cues occur in `text`.
  std::set<CuePolarity> polarities(std::string_view text) const;

  const std::set<std::string>& terms(CuePolarity p) const;

 private:
  std::set<std::string> positive_, negative_, neutral_;
};

// Keeps everything when the query has no cues or cues of several
// polarities. When the query has exactly one polarity P, keeps candidates
// that contain a P cue or no cue at all.
std::vector<NewsItem> cue_filter(std::span<const NewsItem> candidates, const NewsItem& query,
                                 const SentimentCueLexicon& lexicon);

enum class ScorerKind { Cosine, Overlap };

std::string_view scorer_name(ScorerKind kind);
std::optional<ScorerKind> scorer_from_name(std::string_view name);

struct RetrievalCandidate {
  NewsItem item;
  double similarity = 0.0;
  double weight = 0.0;
  double weighted_score = 0.0;  // similarity * weight
};

struct Exclusion {
  std::string id;
  std::string reason;
};

struct Selection {
  std::vector<RetrievalCandidate> selected;  // ranked, at most k
  std::vector<Exclusion> excluded;           // scorer failures
};

// Strict ranking order: weighted_score desc, then date desc, then id asc.
bool ranks_before(const RetrievalCandidate& a, const RetrievalCandidate& b);

// Scores every candidate against the query, weights by source reliability
// and keeps the top k. Candidates the scorer cannot score are reported in
// `excluded`. InputError when k < 1. A failure to embed the query itself
// propagates.
Selection score_and_select(std::span<const NewsItem> filtered, const NewsItem& query,
                           const SourceWeights& weights, ScorerKind scorer, std::size_t k,
                           EmbeddingProvider& embedder);

// Fixed-template summary of up to three preceding opens with day-over-day
// changes. Empty for no bars; InputError for more than three.
std::string price_narrative(std::span<const PriceBar> bars);

struct ContextBundle {
  NewsItem query;
  std::vector<RetrievalCandidate> selected;
  std::string price_narrative;
  std::string rendered_prompt;

  // Distinct sources of the selected items, in selection order.
  std::vector<std::string> contributing_sources() const;
};

// Instruction-format prompt. Without context and narrative it is exactly
// `<s>[INST] Classify the sentiment of the following financial sentence:
// <headline> [/INST]`; otherwise a `Context:` block of `source: headline`
// lines and an optional `Price: ...` line precede the instruction sentence.
std::string render_prompt(const ContextBundle& bundle);

// Extracts the query sentence back out of a rendered prompt.
std::string_view prompt_query(std::string_view prompt);

inline constexpr std::size_t kDefaultTopK = 3;
inline constexpr int kDefaultWindowDays = 3;
inline constexpr std::size_t kPriceContextDays = 3;

struct RetrievalConfig {
  std::size_t k = kDefaultTopK;  // 0 bypasses retrieval entirely
  int window_days = kDefaultWindowDays;
  ScorerKind scorer = ScorerKind::Cosine;
  bool use_cue_filter = true;
  bool price_context = false;
};

struct BuildResult {
  ContextBundle bundle;
  std::vector<Exclusion> excluded;
};

// Candidate retrieval, cue filtering, weighted scoring, top-k selection
// and prompt assembly for one query against a fixed corpus snapshot.
class RagPipeline {
 public:
  RagPipeline(const CorpusStore& corpus, EmbeddingProvider& embedder,
              SentimentCueLexicon lexicon, RetrievalConfig config,
              const PriceStore* prices = nullptr);

  BuildResult build(const NewsItem& query, const SourceWeights& weights) const;

  const RetrievalConfig& config() const { return config_; }
  const SentimentCueLexicon& lexicon() const { return lexicon_; }

 private:
  const CorpusStore& corpus_;
  EmbeddingProvider& embedder_;
  SentimentCueLexicon lexicon_;
  RetrievalConfig config_;
  const PriceStore* prices_;
};

}  // namespace sentirag
