#include "comfort/calendar.hpp"

#include <chrono>
#include <cstdio>

#include "comfort/error.hpp"

namespace comfort {

namespace chr = std::chrono;

Timestamp from_civil(const CivilDate& d, int hour, int minute, int second) {
  chr::year_month_day ymd{chr::year{d.year}, chr::month{d.month}, chr::day{d.day}};
  if (!ymd.ok()) {
    throw ParseError("invalid calendar date " + std::to_string(d.year) + "-" +
                     std::to_string(d.month) + "-" + std::to_string(d.day));
  }
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * kSecondsPerDay + hour * 3600 + minute * 60 + second;
}

static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

CivilDate to_civil(Timestamp t) {
  const chr::sys_days sd{chr::days{floor_div(t, kSecondsPerDay)}};
  const chr::year_month_day ymd{sd};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day())};
}

int weekday(Timestamp t) {
  const chr::sys_days sd{chr::days{floor_div(t, kSecondsPerDay)}};
  return static_cast<int>(chr::weekday{sd}.iso_encoding()) - 1;
}

int day_of_year(Timestamp t) {
  const CivilDate c = to_civil(t);
  const Timestamp jan1 = from_civil({c.year, 1, 1});
  return static_cast<int>(floor_div(t - jan1, kSecondsPerDay)) + 1;
}

std::int64_t seconds_of_day(Timestamp t) { return t - floor_div(t, kSecondsPerDay) * kSecondsPerDay; }

Timestamp midnight(Timestamp t) { return floor_div(t, kSecondsPerDay) * kSecondsPerDay; }

std::string format_iso(Timestamp t) {
  const CivilDate c = to_civil(t);
  const auto s = seconds_of_day(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", c.year, c.month, c.day,
                static_cast<int>(s / 3600), static_cast<int>(s / 60 % 60), static_cast<int>(s % 60));
  return buf;
}

Timestamp parse_iso(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  const std::string str(s);
  char tail = 0;
  const int n = std::sscanf(str.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &se, &tail);
  if (n != 6 || h > 23 || mi > 59 || se > 59 || h < 0 || mi < 0 || se < 0 || mo < 1 || d < 1) {
    throw ParseError("invalid timestamp '" + str + "' (expected YYYY-MM-DDTHH:MM:SS)");
  }
  return from_civil({y, static_cast<unsigned>(mo), static_cast<unsigned>(d)}, h, mi, se);
}

MonthDay parse_month_day(std::string_view s) {
  int m = 0, d = 0;
  char tail = 0;
  const std::string str(s);
  if (std::sscanf(str.c_str(), "%2d-%2d%c", &m, &d, &tail) != 2 || m < 1 || m > 12 || d < 1 || d > 31) {
    throw ParseError("invalid month-day '" + str + "' (expected MM-DD)");
  }
  return {static_cast<unsigned>(m), static_cast<unsigned>(d)};
}

std::string format_month_day(const MonthDay& md) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02u-%02u", md.month, md.day);
  return buf;
}

TimeGrid heating_season_grid(int year) {
  const Timestamp start = from_civil({year, 10, 1});
  const Timestamp end = from_civil({year + 1, 5, 1});
  return {start, kOutputStep, static_cast<std::size_t>((end - start) / kOutputStep)};
}

}  // namespace comfort
