#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sentirag/date.hpp"
#include "sentirag/sentiment.hpp"

namespace sentirag {

struct PriceBar {
  std::string symbol;
  Date date;
  double open = 0.0;
};

struct DailyReturn {
  std::string symbol;
  Date date;     // day whose open closes the interval
  double value;  // fractional, 0.02 == +2%
};

struct RollingStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
  int window = 0;
};

inline constexpr int kDefaultRollingWindow = 30;

// Open-to-open returns of consecutive bars. Bars must be one symbol, sorted
// ascending by date without duplicates, with positive opens; otherwise
// InputError. Fewer than two bars yield an empty result.
std::vector<DailyReturn> compute_returns(std::span<const PriceBar> bars);

// Mean and sample std of the `window` most recent returns dated strictly
// before `target`. `returns` must be sorted by date. nullopt when fewer than
// `window` such returns exist. ConfigError when window < 2.
std::optional<RollingStats> rolling_stats(std::span<const DailyReturn> returns, Date target,
                                          int window);

// Positive iff r > mean + std, Negative iff r < mean - std, Neutral
// otherwise, Unknown without stats.
SentimentLabel label_headline(double next_day_return, const std::optional<RollingStats>& stats);

// Smallest calendar date strictly after `headline_date`. `calendar` must be
// sorted ascending and non-empty (InputError otherwise).
std::optional<Date> align_headline_to_next_trading_day(Date headline_date,
                                                       std::span<const Date> calendar);

// Per-symbol price history with derived returns.
class PriceStore {
 public:
  struct Series {
    std::vector<PriceBar> bars;
    std::vector<DailyReturn> returns;
    std::vector<Date> calendar;
  };

  // Rejects a duplicate (symbol, date) or a non-positive open with InputError.
  void add(PriceBar bar);

  // Sorts series and derives returns; call after the last add().
  void finalize();

  bool has_symbol(const std::string& symbol) const { return series_.count(symbol) > 0; }
  const Series* series(const std::string& symbol) const;
  std::vector<std::string> symbols() const;
  std::size_t bar_count() const;

  // Up to `n` bars strictly before `date`, oldest first.
  std::vector<PriceBar> bars_before(const std::string& symbol, Date date, std::size_t n) const;

 private:
  std::map<std::string, Series> series_;
  bool finalized_ = false;
};

struct PriceLoadResult {
  PriceStore store;
  std::vector<std::string> errors;  // "line N: reason"
  std::size_t rows_accepted = 0;
};

// Reads CSV with header `symbol,date,open` (column order free). Rows that
// fail to parse are reported and skipped. Throws InputError when the file
// cannot be opened or the header lacks a required column.
PriceLoadResult load_prices_csv(const std::string& path);
PriceLoadResult parse_prices_csv(std::string_view text);

void write_prices_csv(const std::string& path, std::span<const PriceBar> bars);

// Outcome of grounding one headline in market data.
struct MarketLabel {
  SentimentLabel label = SentimentLabel::Unknown;
  std::optional<Date> trade_date;         // next trading day after the headline
  std::optional<double> next_day_return;  // return realized on trade_date
  std::optional<RollingStats> stats;
};

// Aligns a (symbol, date) headline to the next trading day and labels that
// day's return against the rolling statistics of strictly earlier returns.
MarketLabel market_label(const PriceStore& prices, const std::string& symbol, Date headline_date,
                         int window = kDefaultRollingWindow);

}  // namespace sentirag
