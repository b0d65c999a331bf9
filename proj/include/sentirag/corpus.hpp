#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentirag/date.hpp"
#include "sentirag/sentiment.hpp"
#include "sentirag/weights.hpp"

namespace sentirag {

struct NewsItem {
  std::string id;
  std::string headline;
  std::string source;
  std::string symbol;
  Date date;

  bool operator==(const NewsItem&) const = default;
};

// Strips HTML tags, decodes the common character entities, collapses
// whitespace runs to one space and trims.
std::string normalize_headline(std::string_view raw);

// Configured news sources with their initial reliability weights.
class SourceRegistry {
 public:
  SourceRegistry() = default;
  explicit SourceRegistry(SourceWeights initial) : weights_(std::move(initial)) {}

  // `name = weight` lines, optionally under a `[sources]` header.
  static SourceRegistry parse(std::string_view text);
  static SourceRegistry load(const std::string& path);

  // Manually assigned initial weights; the two leading values are the
  // published ones, the rest keep their published ranking order.
  static SourceRegistry default_preset();
  static SourceRegistry uniform(std::vector<std::string> names);

  bool contains(std::string_view name) const { return weights_.index_of(name).has_value(); }
  void register_zero(const std::string& name) { weights_.append_zero(name); }
  const SourceWeights& initial_weights() const { return weights_; }
  std::string to_text() const;

 private:
  SourceWeights weights_;
};

enum class UnknownSourcePolicy { AutoRegister, Reject };

struct IngestReport {
  std::size_t accepted = 0;
  std::map<std::string, std::size_t> per_source;
  std::map<std::string, std::size_t> rejected;  // reason -> count
  std::vector<std::string> auto_registered;
  std::vector<std::string> errors;  // "line N: reason", capped

  std::size_t rejected_total() const;
};

// Immutable-after-ingest news store indexed by (symbol, date).
class CorpusStore {
 public:
  // False (and no change) when the id is already present.
  bool add(NewsItem item);

  std::size_t size() const { return items_.size(); }
  const std::vector<NewsItem>& items() const { return items_; }
  const NewsItem* find(std::string_view id) const;

  // Items for `symbol` within +-floor(window_days/2) calendar days of
  // `center` whose source weight is > 0, excluding `exclude_id` (the query
  // itself). Ordered by (date, id). InputError unless window_days is odd
  // and >= 1.
  std::vector<NewsItem> candidates(const std::string& symbol, Date center, int window_days,
                                   const SourceWeights& weights,
                                   std::string_view exclude_id = {}) const;

  bool operator==(const CorpusStore& other) const { return items_ == other.items_; }

 private:
  std::vector<NewsItem> items_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::vector<std::size_t>> by_symbol_;  // sorted by (date, id)
};

struct IngestOptions {
  UnknownSourcePolicy unknown_source = UnknownSourcePolicy::AutoRegister;
};

// Loads JSONL (one object per line) or CSV with header
// `id,headline,source,symbol,date`. Format is chosen from the first
// non-blank byte: `{` means JSONL. Bad rows are skipped and counted.
// Throws InputError when the file is missing.
IngestReport ingest_corpus(const std::string& path, CorpusStore& store, SourceRegistry& registry,
                           const IngestOptions& opts = {});
IngestReport ingest_corpus_text(std::string_view text, CorpusStore& store,
                                SourceRegistry& registry, const IngestOptions& opts = {});

void write_news_jsonl(const std::string& path, std::span<const NewsItem> items);

// A query headline with its market-grounded truth.
struct TestItem {
  NewsItem query;
  SentimentLabel truth = SentimentLabel::Unknown;
  std::optional<double> next_day_return;
  std::optional<Date> trade_date;
};

// JSONL with the NewsItem keys plus `label`, `next_day_return`,
// `trade_date`. Source may be empty for test headlines.
std::vector<TestItem> load_test_items(const std::string& path);
void write_test_items(const std::string& path, std::span<const TestItem> items);

// Headlines without labels (same JSONL/CSV layout as the corpus, source optional).
std::vector<NewsItem> load_headlines(const std::string& path);

}  // namespace sentirag
