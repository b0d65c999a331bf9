#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentirag/classifier.hpp"
#include "sentirag/corpus.hpp"
#include "sentirag/marketdata.hpp"

namespace sentirag {

// A controllable world for convergence experiments: every query has
// cue-free corpus companions from every source on its symbol and day, and
// an oracle classifier whose accuracy depends on the top-ranked source.
struct SyntheticWorldConfig {
  std::vector<std::string> sources;
  std::vector<double> fidelities;  // one per source
  std::size_t symbols = 20;
  std::size_t days = 100;           // weekdays
  std::size_t min_per_source = 2;   // corpus items per source per query
  std::size_t max_per_source = 3;
  double cue_rate = 0.5;            // share of queries carrying a truth-consistent cue
  double positive_share = 0.35;
  double negative_share = 0.35;     // the rest is neutral
  std::uint64_t seed = 0;
};

struct SyntheticWorld {
  CorpusStore corpus;
  SourceRegistry registry;  // uniform over the configured sources
  OracleFidelity oracle;
  std::vector<TestItem> items;  // sorted by (date, id)
};

// Source names "S1".."Sn" with the given fidelities.
SyntheticWorldConfig synthetic_config(const std::vector<double>& fidelities, std::uint64_t seed);

SyntheticWorld make_synthetic_world(const SyntheticWorldConfig& config);

// Random-walk open prices on weekdays (with occasional market holidays)
// and headlines on arbitrary calendar days, weekends included.
struct SyntheticMarket {
  std::vector<PriceBar> bars;
  std::vector<NewsItem> headlines;
};

SyntheticMarket make_synthetic_market(std::size_t symbols, std::size_t trading_days,
                                      std::size_t headlines_per_symbol, std::uint64_t seed);

}  // namespace sentirag
