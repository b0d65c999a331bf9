#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace sentirag {

// Calendar date with day arithmetic.
using Date = std::chrono::sys_days;

// Parses strict ISO-8601 `YYYY-MM-DD`; nullopt on any malformed or
// non-existent date.
std::optional<Date> parse_date(std::string_view text);

// Formats as `YYYY-MM-DD`.
std::string format_date(Date d);

Date make_date(int y, unsigned m, unsigned d);

inline Date add_days(Date d, int n) { return d + std::chrono::days{n}; }

inline long days_between(Date from, Date to) { return (to - from).count(); }

// Monday = 0 ... Sunday = 6.
unsigned iso_weekday_index(Date d);

inline bool is_weekend(Date d) { return iso_weekday_index(d) >= 5; }

}  // namespace sentirag
