#include "sentirag/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "sentirag/error.hpp"
#include "sentirag/text.hpp"

namespace sentirag {

std::vector<DailyReturn> compute_returns(std::span<const PriceBar> bars) {
  for (std::size_t i = 0; i < bars.size(); ++i) {
    if (!(bars[i].open > 0.0) || !std::isfinite(bars[i].open))
      throw InputError(fmt::format("non-positive open {} for {} on {}", bars[i].open,
                                   bars[i].symbol, format_date(bars[i].date)));
    if (i > 0) {
      if (bars[i].symbol != bars[0].symbol)
        throw InputError("compute_returns: bars mix symbols");
      if (bars[i].date <= bars[i - 1].date)
        throw InputError(fmt::format("compute_returns: dates not strictly ascending at {}",
                                     format_date(bars[i].date)));
    }
  }
  std::vector<DailyReturn> out;
  if (bars.size() < 2) return out;
  out.reserve(bars.size() - 1);
  for (std::size_t i = 1; i < bars.size(); ++i) {
    double prev = bars[i - 1].open;
    out.push_back({bars[i].symbol, bars[i].date, (bars[i].open - prev) / prev});
  }
  return out;
}

std::optional<RollingStats> rolling_stats(std::span<const DailyReturn> returns, Date target,
                                          int window) {
  if (window < 2) throw ConfigError(fmt::format("rolling window must be >= 2, got {}", window));
  auto end = std::lower_bound(returns.begin(), returns.end(), target,
                              [](const DailyReturn& r, Date d) { return r.date < d; });
  auto available = static_cast<std::size_t>(end - returns.begin());
  auto w = static_cast<std::size_t>(window);
  if (available < w) return std::nullopt;
  auto begin = end - static_cast<std::ptrdiff_t>(w);

  double sum = 0.0;
  for (auto it = begin; it != end; ++it) sum += it->value;
  double mean = sum / static_cast<double>(w);
  double ss = 0.0;
  for (auto it = begin; it != end; ++it) ss += (it->value - mean) * (it->value - mean);
  return RollingStats{mean, std::sqrt(ss / static_cast<double>(w - 1)), window};
}

SentimentLabel label_headline(double next_day_return, const std::optional<RollingStats>& stats) {
  if (!stats) return SentimentLabel::Unknown;
  if (next_day_return > stats->mean + stats->std) return SentimentLabel::Positive;
  if (next_day_return < stats->mean - stats->std) return SentimentLabel::Negative;
  return SentimentLabel::Neutral;
}

std::optional<Date> align_headline_to_next_trading_day(Date headline_date,
                                                       std::span<const Date> calendar) {
  if (calendar.empty()) throw InputError("trading calendar is empty");
  auto it = std::upper_bound(calendar.begin(), calendar.end(), headline_date);
  if (it == calendar.end()) return std::nullopt;
  return *it;
}

void PriceStore::add(PriceBar bar) {
  if (!(bar.open > 0.0) || !std::isfinite(bar.open))
    throw InputError(fmt::format("open must be positive, got {}", bar.open));
  auto& s = series_[bar.symbol];
  for (const auto& b : s.bars)
    if (b.date == bar.date)
      throw InputError(fmt::format("duplicate bar for {} on {}", bar.symbol,
                                   format_date(bar.date)));
  s.bars.push_back(std::move(bar));
  finalized_ = false;
}

void PriceStore::finalize() {
  for (auto& [symbol, s] : series_) {
    std::sort(s.bars.begin(), s.bars.end(),
              [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    s.returns = compute_returns(s.bars);
    s.calendar.clear();
    for (const auto& b : s.bars) s.calendar.push_back(b.date);
  }
  finalized_ = true;
}

const PriceStore::Series* PriceStore::series(const std::string& symbol) const {
  if (!finalized_ && !series_.empty())
    throw Error("PriceStore::series called before finalize()");
  auto it = series_.find(symbol);
  return it == series_.end() ? nullptr : &it->second;
}

std::vector<std::string> PriceStore::symbols() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : series_) out.push_back(k);
  return out;
}

std::size_t PriceStore::bar_count() const {
  std::size_t n = 0;
  for (const auto& [k, v] : series_) n += v.bars.size();
  return n;
}

std::vector<PriceBar> PriceStore::bars_before(const std::string& symbol, Date date,
                                              std::size_t n) const {
  const Series* s = series(symbol);
  if (s == nullptr) return {};
  auto end = std::lower_bound(s->bars.begin(), s->bars.end(), date,
                              [](const PriceBar& b, Date d) { return b.date < d; });
  auto avail = static_cast<std::size_t>(end - s->bars.begin());
  auto begin = end - static_cast<std::ptrdiff_t>(std::min(n, avail));
  return {begin, end};
}

PriceLoadResult parse_prices_csv(std::string_view text) {
  PriceLoadResult result;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  int c_symbol = -1, c_date = -1, c_open = -1;
  std::size_t columns = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    try {
      fields = split_csv_line(line);
    } catch (const InputError& e) {
      if (c_symbol < 0) throw InputError(fmt::format("price header: {}", e.what()));
      result.errors.push_back(fmt::format("line {}: {}", line_no, e.what()));
      continue;
    }
    if (c_symbol < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string h = to_lower(trim(fields[i]));
        if (h == "symbol") c_symbol = static_cast<int>(i);
        if (h == "date") c_date = static_cast<int>(i);
        if (h == "open") c_open = static_cast<int>(i);
      }
      if (c_symbol < 0 || c_date < 0 || c_open < 0)
        throw InputError("price CSV header must contain symbol,date,open");
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      result.errors.push_back(
          fmt::format("line {}: expected {} fields, got {}", line_no, columns, fields.size()));
      continue;
    }
    std::string symbol = trim(fields[static_cast<std::size_t>(c_symbol)]);
    std::string date_text = trim(fields[static_cast<std::size_t>(c_date)]);
    std::string open_text = trim(fields[static_cast<std::size_t>(c_open)]);
    if (symbol.empty()) {
      result.errors.push_back(fmt::format("line {}: empty symbol", line_no));
      continue;
    }
    auto date = parse_date(date_text);
    if (!date) {
      result.errors.push_back(fmt::format("line {}: bad date `{}`", line_no, date_text));
      continue;
    }
    double open = 0.0;
    auto [ptr, ec] = std::from_chars(open_text.data(), open_text.data() + open_text.size(), open);
    if (ec != std::errc{} || ptr != open_text.data() + open_text.size()) {
      result.errors.push_back(fmt::format("line {}: bad open `{}`", line_no, open_text));
      continue;
    }
    try {
      result.store.add({symbol, *date, open});
      ++result.rows_accepted;
    } catch (const InputError& e) {
      result.errors.push_back(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (c_symbol < 0) throw InputError("price CSV is missing its header");
  result.store.finalize();
  return result;
}

PriceLoadResult load_prices_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open price file `{}`", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_prices_csv(ss.str());
}

void write_prices_csv(const std::string& path, std::span<const PriceBar> bars) {
  std::ofstream out(path);
  if (!out) throw InputError(fmt::format("cannot write `{}`", path));
  out << "symbol,date,open\n";
  for (const auto& b : bars)
    out << csv_escape(b.symbol) << ',' << format_date(b.date) << ',' << fmt::format("{:.6f}", b.open)
        << '\n';
}

MarketLabel market_label(const PriceStore& prices, const std::string& symbol, Date headline_date,
                         int window) {
  MarketLabel out;
  const auto* s = prices.series(symbol);
  if (s == nullptr || s->calendar.empty()) return out;
  out.trade_date = align_headline_to_next_trading_day(headline_date, s->calendar);
  if (!out.trade_date) return out;
  auto it = std::lower_bound(s->returns.begin(), s->returns.end(), *out.trade_date,
                             [](const DailyReturn& r, Date d) { return r.date < d; });
  // The first bar of a series has no return.
  if (it == s->returns.end() || it->date != *out.trade_date) return out;
  out.next_day_return = it->value;
  out.stats = rolling_stats(s->returns, *out.trade_date, window);
  out.label = label_headline(it->value, out.stats);
  return out;
}

}  // namespace sentirag
