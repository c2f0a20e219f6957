#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace comfort {

/// Seconds since 1970-01-01T00:00 on the local standard-time clock
/// (no daylight saving). All series in the project share this clock.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kOutputStep = 1800;

struct CivilDate {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  friend bool operator==(const CivilDate&, const CivilDate&) = default;
};

/// Month/day pair without a year (heating on/off dates).
struct MonthDay {
  unsigned month = 1;
  unsigned day = 1;
  friend bool operator==(const MonthDay&, const MonthDay&) = default;
};

Timestamp from_civil(const CivilDate& d, int hour = 0, int minute = 0, int second = 0);
CivilDate to_civil(Timestamp t);
/// 0 = Monday ... 6 = Sunday.
int weekday(Timestamp t);
/// Day of year, 1-based.
int day_of_year(Timestamp t);
/// Seconds elapsed since local midnight.
std::int64_t seconds_of_day(Timestamp t);
Timestamp midnight(Timestamp t);

std::string format_iso(Timestamp t);
Timestamp parse_iso(std::string_view s);
MonthDay parse_month_day(std::string_view s);
std::string format_month_day(const MonthDay& md);

/// Uniform time grid: times start + k*step for k in [0, count).
struct TimeGrid {
  Timestamp start = 0;
  std::int64_t step = kOutputStep;
  std::size_t count = 0;

  Timestamp at(std::size_t k) const { return start + static_cast<std::int64_t>(k) * step; }
  Timestamp end() const { return at(count); }
  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Oct 1 of `year` 00:00 to May 1 of `year`+1 00:00 (exclusive) at 1800 s.
TimeGrid heating_season_grid(int year);

}  // namespace comfort
