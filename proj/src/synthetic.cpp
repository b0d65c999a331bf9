#include "sentirag/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "sentirag/error.hpp"
#include "sentirag/rng.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

namespace {

// No entry may be a sentiment cue of the default lexicon.
constexpr std::array kTopicWords = {
    "board",    "meeting",  "quarter",  "results",  "shares",   "market",  "sector",
    "update",   "plans",    "company",  "outlook",  "investors", "announces", "deal",
    "order",    "capacity", "plant",    "dividend", "exports",  "demand",  "pricing",
    "talks",    "merger",   "stake",    "filing",   "review",   "guidance", "margin",
    "revenue",  "capex",    "contract", "partnership", "launch", "unit",   "segment",
    "retail",   "digital",  "credit",   "rating",   "auditor",  "lender",  "tender",
    "subsidiary", "pipeline", "volume", "brand",    "network",  "steel",   "pharma",
    "energy",   "telecom",  "banking",  "insurance", "logistics", "cement", "power"};

constexpr std::array kPositiveCues = {"gains", "rally", "surges", "jumps", "beats"};
constexpr std::array kNegativeCues = {"falls", "slump", "drops", "plunge", "misses"};
constexpr std::array kNeutralCues = {"steady", "flat", "unchanged", "stable"};

std::string topic_phrase(Rng& rng, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += ' ';
    out += kTopicWords[rng.index(kTopicWords.size())];
  }
  return out;
}

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& words) {
  return words[rng.index(N)];
}

Date next_weekday(Date d) {
  do d = add_days(d, 1);
  while (is_weekend(d));
  return d;
}

}  // namespace

SyntheticWorldConfig synthetic_config(const std::vector<double>& fidelities, std::uint64_t seed) {
  SyntheticWorldConfig c;
  for (std::size_t i = 0; i < fidelities.size(); ++i) c.sources.push_back(fmt::format("S{}", i + 1));
  c.fidelities = fidelities;
  c.seed = seed;
  return c;
}

SyntheticWorld make_synthetic_world(const SyntheticWorldConfig& config) {
  if (config.sources.empty() || config.sources.size() != config.fidelities.size())
    throw ConfigError("synthetic world needs one fidelity per source");
  if (config.min_per_source == 0 || config.max_per_source < config.min_per_source)
    throw ConfigError("bad per-source corpus counts");

  SyntheticWorld world;
  world.registry = SourceRegistry::uniform(config.sources);
  for (std::size_t i = 0; i < config.sources.size(); ++i)
    world.oracle.per_source[config.sources[i]] = config.fidelities[i];
  world.oracle.validate();

  Rng rng(config.seed);
  Date day = make_date(2024, 1, 1);  // a Monday
  std::size_t news_no = 0;
  for (std::size_t d = 0; d < config.days; ++d, day = next_weekday(day)) {
    for (std::size_t s = 0; s < config.symbols; ++s) {
      std::string symbol = fmt::format("SYM{:02}", s);
      std::string sym_token = to_lower(symbol);

      TestItem item;
      item.query.id = fmt::format("q{:03}-{:02}", d, s);
      item.query.symbol = symbol;
      item.query.date = day;
      item.trade_date = next_weekday(day);
      double u = rng.uniform();
      std::string headline = sym_token + topic_phrase(rng, 3);
      bool cue = rng.uniform() < config.cue_rate;
      if (u < config.positive_share) {
        item.truth = SentimentLabel::Positive;
        item.next_day_return = rng.uniform(0.008, 0.03);
        if (cue) headline += std::string(" ") + pick(rng, kPositiveCues);
      } else if (u < config.positive_share + config.negative_share) {
        item.truth = SentimentLabel::Negative;
        item.next_day_return = -rng.uniform(0.008, 0.03);
        if (cue) headline += std::string(" ") + pick(rng, kNegativeCues);
      } else {
        item.truth = SentimentLabel::Neutral;
        item.next_day_return = rng.uniform(-0.004, 0.004);
        if (cue) headline += std::string(" ") + pick(rng, kNeutralCues);
      }
      item.query.headline = headline;
      world.items.push_back(std::move(item));

      for (const auto& source : config.sources) {
        std::size_t span = config.max_per_source - config.min_per_source + 1;
        std::size_t count = config.min_per_source + rng.index(span);
        for (std::size_t c = 0; c < count; ++c) {
          NewsItem n;
          n.id = fmt::format("n{:06}", news_no++);
          n.headline = sym_token + topic_phrase(rng, 4);
          n.source = source;
          n.symbol = symbol;
          n.date = day;
          world.corpus.add(std::move(n));
        }
      }
    }
  }
  std::stable_sort(world.items.begin(), world.items.end(), [](const TestItem& a, const TestItem& b) {
    return a.query.date != b.query.date ? a.query.date < b.query.date : a.query.id < b.query.id;
  });
  return world;
}

SyntheticMarket make_synthetic_market(std::size_t symbols, std::size_t trading_days,
                                      std::size_t headlines_per_symbol, std::uint64_t seed) {
  SyntheticMarket m;
  Rng rng(seed);
  for (std::size_t s = 0; s < symbols; ++s) {
    std::string symbol = fmt::format("MKT{}", s);
    double price = rng.uniform(50.0, 500.0);
    double vol = rng.uniform(0.005, 0.03);
    Date day = make_date(2023, 1, 2);
    Date first = day;
    for (std::size_t t = 0; t < trading_days; day = next_weekday(day)) {
      if (rng.uniform() < 0.02) continue;  // market holiday
      m.bars.push_back({symbol, day, price});
      price *= std::exp(vol * rng.normal());
      ++t;
    }
    long span = days_between(first, day) + 5;
    for (std::size_t h = 0; h < headlines_per_symbol; ++h) {
      NewsItem n;
      n.id = fmt::format("h{}-{:04}", s, h);
      n.symbol = symbol;
      n.date = add_days(first, static_cast<int>(rng.index(static_cast<std::uint64_t>(span))) - 2);
      n.headline = to_lower(symbol) + topic_phrase(rng, 4);
      m.headlines.push_back(std::move(n));
    }
  }
  return m;
}

}  // namespace sentirag
