#include "sentirag/retrieval.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "sentirag/error.hpp"

namespace sentirag {

namespace {

constexpr std::string_view kInstruction = "Classify the sentiment of the following financial sentence: ";
constexpr std::string_view kOpen = "<s>[INST] ";
constexpr std::string_view kClose = " [/INST]";

std::set<std::string> split_terms(const std::string& list) {
  std::set<std::string> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    auto comma = list.find(',', pos);
    if (comma == std::string::npos) comma = list.size();
    std::string t = to_lower(trim(std::string_view(list).substr(pos, comma - pos)));
    if (!t.empty()) out.insert(t);
    pos = comma + 1;
  }
  return out;
}

}  // namespace

SentimentCueLexicon::SentimentCueLexicon(std::set<std::string> positive,
                                         std::set<std::string> negative,
                                         std::set<std::string> neutral)
    : positive_(std::move(positive)), negative_(std::move(negative)), neutral_(std::move(neutral)) {
  for (const auto& t : positive_)
    if (negative_.count(t) || neutral_.count(t))
      throw ConfigError(fmt::format("cue `{}` appears in more than one polarity", t));
  for (const auto& t : negative_)
    if (neutral_.count(t))
      throw ConfigError(fmt::format("cue `{}` appears in more than one polarity", t));
}

SentimentCueLexicon SentimentCueLexicon::default_finance() {
  return SentimentCueLexicon(
      {"gain", "gains", "rise", "rises", "rally", "surge", "surges", "jump", "jumps", "soar",
       "beat", "beats", "profit", "growth", "upgrade", "bullish", "record"},
      {"fall", "falls", "drop", "drops", "decline", "declines", "slump", "plunge", "loss",
       "losses", "miss", "misses", "downgrade", "bearish", "weak", "crash"},
      {"stable", "steady", "flat", "unchanged", "hold", "holds", "neutral"});
}

SentimentCueLexicon SentimentCueLexicon::from_config(const KeyValueDoc& doc) {
  auto base = default_finance();
  auto pick = [&](const char* key, CuePolarity p) {
    std::string full = std::string("cues.") + key;
    return doc.has(full) ? split_terms(doc.get(full)) : base.terms(p);
  };
  return SentimentCueLexicon(pick("positive", CuePolarity::Positive),
                             pick("negative", CuePolarity::Negative),
                             pick("neutral", CuePolarity::Neutral));
}

const std::set<std::string>& SentimentCueLexicon::terms(CuePolarity p) const {
  switch (p) {
    case CuePolarity::Positive: return positive_;
    case CuePolarity::Negative: return negative_;
    case CuePolarity::Neutral: break;
  }
  return neutral_;
}

std::set<CuePolarity> SentimentCueLexicon::polarities(std::string_view text) const {
  std::set<CuePolarity> out;
  for (const auto& tok : word_tokens(text)) {
    if (positive_.count(tok)) out.insert(CuePolarity::Positive);
    if (negative_.count(tok)) out.insert(CuePolarity::Negative);
    if (neutral_.count(tok)) out.insert(CuePolarity::Neutral);
  }
  return out;
}

std::vector<NewsItem> cue_filter(std::span<const NewsItem> candidates, const NewsItem& query,
                                 const SentimentCueLexicon& lexicon) {
  auto q = lexicon.polarities(query.headline);
  if (q.size() != 1) return {candidates.begin(), candidates.end()};
  CuePolarity want = *q.begin();
  std::vector<NewsItem> out;
  for (const auto& c : candidates) {
    auto p = lexicon.polarities(c.headline);
    if (p.empty() || p.count(want)) out.push_back(c);
  }
  return out;
}

std::string_view scorer_name(ScorerKind kind) {
  return kind == ScorerKind::Cosine ? "cosine" : "overlap";
}

std::optional<ScorerKind> scorer_from_name(std::string_view name) {
  std::string n = to_lower(name);
  if (n == "cosine") return ScorerKind::Cosine;
  if (n == "overlap" || n == "woc") return ScorerKind::Overlap;
  return std::nullopt;
}

bool ranks_before(const RetrievalCandidate& a, const RetrievalCandidate& b) {
  if (a.weighted_score != b.weighted_score) return a.weighted_score > b.weighted_score;
  if (a.item.date != b.item.date) return a.item.date > b.item.date;
  return a.item.id < b.item.id;
}

Selection score_and_select(std::span<const NewsItem> filtered, const NewsItem& query,
                           const SourceWeights& weights, ScorerKind scorer, std::size_t k,
                           EmbeddingProvider& embedder) {
  if (k < 1) throw InputError("top-k must be >= 1");
  Selection out;
  std::vector<RetrievalCandidate> scored;
  scored.reserve(filtered.size());

  SentenceVector query_vec;
  TokenSet query_tokens;
  if (scorer == ScorerKind::Cosine)
    query_vec = embedder.embed(query.id, query.headline);
  else
    query_tokens = token_set(query.headline);

  for (const auto& item : filtered) {
    double sim = 0.0;
    try {
      sim = scorer == ScorerKind::Cosine ? cosine(query_vec, embedder.embed(item.id, item.headline))
                                         : overlap_coefficient(query_tokens, token_set(item.headline));
    } catch (const RetryableError&) {
      throw;
    } catch (const Error& e) {
      out.excluded.push_back({item.id, e.what()});
      continue;
    }
    double w = weights.weight(item.source);
    scored.push_back({item, sim, w, sim * w});
  }
  std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), ranks_before);
  scored.resize(keep);
  out.selected = std::move(scored);
  return out;
}

std::string price_narrative(std::span<const PriceBar> bars) {
  if (bars.empty()) return {};
  if (bars.size() > kPriceContextDays)
    throw InputError(fmt::format("price narrative takes at most {} bars", kPriceContextDays));
  std::string out = fmt::format("Over the last {} trading day{}, {} opened at {:.2f}", bars.size(),
                                bars.size() == 1 ? "" : "s", bars.front().symbol, bars[0].open);
  for (std::size_t i = 1; i < bars.size(); ++i) {
    double change = (bars[i].open - bars[i - 1].open) / bars[i - 1].open * 100.0;
    out += fmt::format(", {:.2f} ({:+.2f}%)", bars[i].open, change);
  }
  out += '.';
  return out;
}

std::vector<std::string> ContextBundle::contributing_sources() const {
  std::vector<std::string> out;
  for (const auto& c : selected)
    if (std::find(out.begin(), out.end(), c.item.source) == out.end())
      out.push_back(c.item.source);
  return out;
}

std::string render_prompt(const ContextBundle& bundle) {
  std::string out(kOpen);
  if (!bundle.selected.empty()) {
    out += "Context:\n";
    for (const auto& c : bundle.selected) out += fmt::format("{}: {}\n", c.item.source, c.item.headline);
  }
  if (!bundle.price_narrative.empty()) out += fmt::format("Price: {}\n", bundle.price_narrative);
  out += kInstruction;
  out += bundle.query.headline;
  out += kClose;
  return out;
}

std::string_view prompt_query(std::string_view prompt) {
  auto start = prompt.rfind(kInstruction);
  if (start == std::string_view::npos) return prompt;
  start += kInstruction.size();
  auto end = prompt.rfind(kClose);
  if (end == std::string_view::npos || end < start) end = prompt.size();
  return prompt.substr(start, end - start);
}

RagPipeline::RagPipeline(const CorpusStore& corpus, EmbeddingProvider& embedder,
                         SentimentCueLexicon lexicon, RetrievalConfig config,
                         const PriceStore* prices)
    : corpus_(corpus),
      embedder_(embedder),
      lexicon_(std::move(lexicon)),
      config_(config),
      prices_(prices) {
  if (config_.window_days < 1 || config_.window_days % 2 == 0)
    throw ConfigError("window_days must be odd and >= 1");
  if (config_.price_context && prices_ == nullptr)
    throw ConfigError("price context requires price data");
}

BuildResult RagPipeline::build(const NewsItem& query, const SourceWeights& weights) const {
  BuildResult out;
  out.bundle.query = query;
  if (config_.k > 0) {
    auto cands = corpus_.candidates(query.symbol, query.date, config_.window_days, weights, query.id);
    if (config_.use_cue_filter) cands = cue_filter(cands, query, lexicon_);
    auto sel = score_and_select(cands, query, weights, config_.scorer, config_.k, embedder_);
    out.bundle.selected = std::move(sel.selected);
    out.excluded = std::move(sel.excluded);
  }
  if (config_.price_context) {
    auto bars = prices_->bars_before(query.symbol, query.date, kPriceContextDays);
    out.bundle.price_narrative = price_narrative(bars);
  }
  out.bundle.rendered_prompt = render_prompt(out.bundle);
  return out;
}

}  // namespace sentirag
