#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sentirag/error.hpp"
#include "sentirag/marketdata.hpp"
#include "sentirag/synthetic.hpp"
#include "test_support.hpp"

using namespace sentirag;

namespace {

std::vector<PriceBar> bars_from(const std::vector<double>& opens, Date start = make_date(2024, 1, 1)) {
  std::vector<PriceBar> out;
  for (std::size_t i = 0; i < opens.size(); ++i)
    out.push_back({"TCS", add_days(start, static_cast<int>(i)), opens[i]});
  return out;
}

std::vector<DailyReturn> returns_from(const std::vector<double>& values) {
  std::vector<DailyReturn> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back({"TCS", add_days(make_date(2024, 1, 2), static_cast<int>(i)), values[i]});
  return out;
}

// Textbook recomputation: copy the window out and use the two-pass formula.
std::optional<RollingStats> naive_stats(const std::vector<DailyReturn>& r, Date target, int window) {
  std::vector<double> prior;
  for (const auto& x : r)
    if (x.date < target) prior.push_back(x.value);
  if (prior.size() < static_cast<std::size_t>(window)) return std::nullopt;
  std::vector<double> w(prior.end() - window, prior.end());
  double mean = 0;
  for (double v : w) mean += v;
  mean /= window;
  double ss = 0;
  for (double v : w) ss += (v - mean) * (v - mean);
  return RollingStats{mean, std::sqrt(ss / (window - 1)), window};
}

}  // namespace

TEST(ComputeReturns, ForcedArithmetic) {
  auto r = compute_returns(bars_from({100.0, 102.0}));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_DOUBLE_EQ(r[0].value, 0.02);

  r = compute_returns(bars_from({100.0, 100.0}));
  EXPECT_EQ(r[0].value, 0.0);

  r = compute_returns(bars_from({100.0, 102.0, 96.9}));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_DOUBLE_EQ(r[0].value, 0.02);
  EXPECT_NEAR(r[1].value, -0.05, 1e-15);
  EXPECT_EQ(r[1].date, make_date(2024, 1, 3));
}

TEST(ComputeReturns, ShortInputsAreEmpty) {
  EXPECT_TRUE(compute_returns({}).empty());
  EXPECT_TRUE(compute_returns(bars_from({100.0})).empty());
}

TEST(ComputeReturns, RejectsBadInput) {
  EXPECT_THROW(compute_returns(bars_from({100.0, 0.0})), InputError);
  EXPECT_THROW(compute_returns(bars_from({-1.0, 5.0})), InputError);
  auto unsorted = bars_from({100.0, 101.0});
  std::swap(unsorted[0], unsorted[1]);
  EXPECT_THROW(compute_returns(unsorted), InputError);
  auto mixed = bars_from({100.0, 101.0});
  mixed[1].symbol = "INFY";
  EXPECT_THROW(compute_returns(mixed), InputError);
  auto dup = bars_from({100.0, 101.0});
  dup[1].date = dup[0].date;
  EXPECT_THROW(compute_returns(dup), InputError);
}

TEST(ComputeReturns, ReconstructionRecoversOpens) {
  std::mt19937_64 gen(11);
  std::lognormal_distribution<double> step(0.0, 0.03);
  std::vector<double> opens{250.0};
  for (int i = 0; i < 500; ++i) opens.push_back(opens.back() * step(gen));
  auto r = compute_returns(bars_from(opens));
  double price = opens[0];
  for (std::size_t i = 0; i < r.size(); ++i) {
    price *= 1.0 + r[i].value;
    EXPECT_LT(std::abs(price - opens[i + 1]) / opens[i + 1], 1e-12) << "at " << i;
  }
}

TEST(RollingStats, ForcedArithmetic) {
  auto r = returns_from({0.01, 0.02, 0.03});
  auto s = rolling_stats(r, make_date(2024, 2, 1), 3);
  ASSERT_TRUE(s);
  EXPECT_NEAR(s->mean, 0.02, 1e-15);
  EXPECT_NEAR(s->std, 0.01, 1e-15);
  EXPECT_EQ(s->window, 3);
}

TEST(RollingStats, InsufficientHistory) {
  auto r = returns_from({0.01, 0.02});
  EXPECT_FALSE(rolling_stats(r, make_date(2024, 2, 1), 3));
  // The target day's own return is never part of its window.
  auto r3 = returns_from({0.01, 0.02, 0.03});
  EXPECT_FALSE(rolling_stats(r3, r3.back().date, 3));
}

TEST(RollingStats, WindowBelowTwoIsConfigError) {
  auto r = returns_from({0.01, 0.02});
  EXPECT_THROW(rolling_stats(r, make_date(2024, 2, 1), 1), ConfigError);
}

TEST(RollingStats, MatchesNaiveRecomputationOnEveryWindow) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> noise(0.0005, 0.015);
  std::vector<double> opens{100.0};
  for (int i = 0; i < 200; ++i) opens.push_back(opens.back() * (1.0 + noise(gen)));
  auto r = compute_returns(bars_from(opens));
  for (int window : {2, 5, 30}) {
    for (const auto& ret : r) {
      Date target = add_days(ret.date, 1);
      auto got = rolling_stats(r, target, window);
      auto want = naive_stats(r, target, window);
      ASSERT_EQ(got.has_value(), want.has_value());
      if (!got) continue;
      EXPECT_NEAR(got->mean, want->mean, 1e-15);
      EXPECT_NEAR(got->std, want->std, 1e-14);
    }
  }
}

TEST(LabelHeadline, Thresholds) {
  RollingStats s{0.02, 0.01, 30};
  EXPECT_EQ(label_headline(0.035, s), SentimentLabel::Positive);
  EXPECT_EQ(label_headline(0.0, s), SentimentLabel::Negative);
  EXPECT_EQ(label_headline(0.02, s), SentimentLabel::Neutral);
  EXPECT_EQ(label_headline(0.5, std::nullopt), SentimentLabel::Unknown);
}

TEST(LabelHeadline, BoundariesAreNeutral) {
  RollingStats s{0.5, 0.25, 30};  // exact binary fractions: mean +- std is exact
  EXPECT_EQ(label_headline(0.75, s), SentimentLabel::Neutral);
  EXPECT_EQ(label_headline(0.25, s), SentimentLabel::Neutral);
  EXPECT_EQ(label_headline(std::nextafter(0.75, 1.0), s), SentimentLabel::Positive);
  EXPECT_EQ(label_headline(std::nextafter(0.25, 0.0), s), SentimentLabel::Negative);
}

TEST(LabelHeadline, MonotoneInReturn) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    RollingStats s{u(gen) / 10, std::abs(u(gen)) / 2, 30};
    int last = -1;  // ranks: negative 0, neutral 1, positive 2
    for (double r = -0.2; r <= 0.2; r += 0.0005) {
      auto l = label_headline(r, s);
      int rank = l == SentimentLabel::Negative ? 0 : l == SentimentLabel::Neutral ? 1 : 2;
      EXPECT_GE(rank, last);
      last = rank;
    }
  }
}

TEST(AlignHeadline, SkipsWeekendAndIsStrict) {
  std::vector<Date> cal;
  for (int d = 0; d < 14; ++d) {
    Date day = add_days(make_date(2024, 1, 1), d);  // 2024-01-01 is a Monday
    if (!is_weekend(day)) cal.push_back(day);
  }
  Date friday = make_date(2024, 1, 5);
  EXPECT_EQ(align_headline_to_next_trading_day(friday, cal), make_date(2024, 1, 8));
  EXPECT_EQ(align_headline_to_next_trading_day(make_date(2024, 1, 6), cal), make_date(2024, 1, 8));
  EXPECT_EQ(align_headline_to_next_trading_day(make_date(2024, 1, 2), cal), make_date(2024, 1, 3));
  EXPECT_FALSE(align_headline_to_next_trading_day(cal.back(), cal));
  EXPECT_FALSE(align_headline_to_next_trading_day(add_days(cal.back(), 3), cal));
  EXPECT_THROW(align_headline_to_next_trading_day(friday, {}), InputError);
}

TEST(PriceCsv, ParsesAnyColumnOrderAndReportsBadRows) {
  auto res = parse_prices_csv(
      "date,open,symbol\n"
      "2024-01-01,100,TCS\n"
      "2024-01-02,102,TCS\n"
      "2024-13-01,5,TCS\n"
      "2024-01-03,abc,TCS\n"
      "2024-01-03,-4,TCS\n"
      "2024-01-02,103,TCS\n"
      "2024-01-03,101,TCS\n");
  EXPECT_EQ(res.rows_accepted, 3u);
  ASSERT_EQ(res.errors.size(), 4u);
  EXPECT_EQ(res.errors[0].rfind("line 4:", 0), 0u) << res.errors[0];
  const auto* s = res.store.series("TCS");
  ASSERT_NE(s, nullptr);
  ASSERT_EQ(s->returns.size(), 2u);
  EXPECT_DOUBLE_EQ(s->returns[0].value, 0.02);
}

TEST(PriceCsv, MissingHeaderColumnIsInputError) {
  EXPECT_THROW(parse_prices_csv("symbol,date,close\nTCS,2024-01-01,1\n"), InputError);
}

TEST(PriceCsv, RoundTripThroughFile) {
  testsupport::TempDir dir;
  auto m = make_synthetic_market(2, 40, 0, 9);
  write_prices_csv(dir.file("p.csv"), m.bars);
  auto back = load_prices_csv(dir.file("p.csv"));
  EXPECT_TRUE(back.errors.empty());
  EXPECT_EQ(back.store.bar_count(), m.bars.size());
}

TEST(MarketLabel, AlignsThenLabelsAgainstPriorWindow) {
  PriceStore store;
  // Weekday bars: 30 small alternating returns, then a jump.
  Date day = make_date(2024, 1, 1);
  double open = 100.0;
  std::vector<Date> days;
  for (int i = 0; i < 40; ++i, day = add_days(day, 1)) {
    if (is_weekend(day)) {
      --i;
      continue;
    }
    days.push_back(day);
    store.add({"TCS", day, open});
    open *= i == 34 ? 1.10 : (i % 2 ? 1.001 : 0.999);
  }
  store.finalize();
  // Headline the evening before the jump lands on the jump day's open.
  Date jump_day = days[35];
  auto before = align_headline_to_next_trading_day(days[34], store.series("TCS")->calendar);
  ASSERT_EQ(before, jump_day);
  auto ml = market_label(store, "TCS", days[34], 30);
  EXPECT_EQ(ml.label, SentimentLabel::Positive);
  ASSERT_TRUE(ml.next_day_return);
  EXPECT_NEAR(*ml.next_day_return, 0.10, 1e-12);
  // Too little history early in the series.
  EXPECT_EQ(market_label(store, "TCS", days[3], 30).label, SentimentLabel::Unknown);
  // Unknown symbol and exhausted calendar.
  EXPECT_EQ(market_label(store, "INFY", days[3], 30).label, SentimentLabel::Unknown);
  EXPECT_EQ(market_label(store, "TCS", days.back(), 30).label, SentimentLabel::Unknown);
}

TEST(PriceStore, RejectsDuplicatesAndNonPositive) {
  PriceStore store;
  store.add({"TCS", make_date(2024, 1, 1), 10.0});
  EXPECT_THROW(store.add({"TCS", make_date(2024, 1, 1), 11.0}), InputError);
  EXPECT_THROW(store.add({"TCS", make_date(2024, 1, 2), 0.0}), InputError);
}
