#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "comfort/error.hpp"
#include "comfort/solar.hpp"
#include "comfort/survey.hpp"
#include "comfort/weather.hpp"
#include "fixtures.hpp"

using namespace comfort;

namespace {

const ClimateTable& climate() {
  static const ClimateTable t = load_climate_table(fixtures::data_file("climate_zones.json"));
  return t;
}

// Almanac sunsets: seconds after local (UTC+1) midnight, upper limb, -0:34 horizon.
struct AlmanacCase {
  int zone, year;
  unsigned month, day;
  double seconds;
};
const AlmanacCase kAlmanac[] = {
    {1, 2022, 12, 21, 60964.187151}, {2, 2022, 10, 1, 65672.512725}, {3, 2023, 1, 15, 62534.433372},
    {4, 2022, 11, 10, 63305.795263}, {5, 2023, 2, 20, 66480.311477}, {6, 2023, 3, 21, 68837.124311},
    {7, 2022, 10, 25, 63678.055344}, {8, 2023, 4, 30, 70310.075502}, {1, 2023, 4, 15, 70908.326137},
    {8, 2022, 12, 5, 60846.300955}};

SolarPosition sun(double zenith, double azimuth, double extra = 1400) { return {zenith, azimuth, extra}; }

}  // namespace

TEST_CASE("solar_position: equator at the equinox") {
  const Site site{0, 0, 0};
  const Timestamp noon = solar_noon(site, from_civil({2023, 3, 20}));
  CHECK(solar_position(site, noon).zenith_deg < 1.0);
}

TEST_CASE("solar_position: Paris summer solstice noon") {
  const Site site{48.85, 2.35, 1};
  const Timestamp noon = solar_noon(site, from_civil({2023, 6, 21}));
  CHECK(std::abs(solar_position(site, noon).zenith_deg - (48.85 - 23.44)) < 0.5);
}

TEST_CASE("solar_position: winter midnight is below the horizon, ranges hold") {
  const Site site{45, 5, 1};
  CHECK(solar_position(site, from_civil({2023, 1, 10})).zenith_deg > 90);
  for (int h = 0; h < 24; ++h) {
    const auto p = solar_position(site, from_civil({2023, 1, 10}, h));
    CHECK(p.zenith_deg >= 0);
    CHECK(p.zenith_deg <= 180);
    CHECK(p.azimuth_deg >= 0);
    CHECK(p.azimuth_deg < 360);
  }
}

TEST_CASE("sunset_time: almanac fixtures within five minutes") {
  std::set<int> zones;
  for (const auto& c : kAlmanac) {
    const auto& z = climate().zone(c.zone);
    const Timestamp day = from_civil({c.year, c.month, c.day});
    const double got = static_cast<double>(sunset_time(z.site, day) - day);
    CAPTURE(c.zone);
    CAPTURE(c.month);
    CHECK(std::abs(got - c.seconds) <= 300.0);
    zones.insert(c.zone);
  }
  CHECK(zones.size() == 8);
}

TEST_CASE("sunset_time: equator equinox six hours after solar noon, deterministic, polar night") {
  const Site site{0, 0, 0};
  const Timestamp day = from_civil({2023, 3, 20});
  const Timestamp s = sunset_time(site, day);
  // Hour angle acos(-sin 0.833 deg) = 90.833 deg, i.e. 6 h 3 min 20 s.
  CHECK(std::abs(static_cast<double>(s - solar_noon(site, day)) - (6 * 3600.0 + 200)) < 120);
  CHECK(sunset_time(site, day) == s);
  CHECK_THROWS_AS(sunset_time(Site{80, 0, 0}, from_civil({2022, 12, 21})), InfeasibleError);
}

TEST_CASE("hdkr: zero irradiance gives zero") {
  CHECK(hdkr_tilted_irradiance({0, 0, 0.2}, 45, 180, sun(50, 180)) == 0.0);
}

TEST_CASE("hdkr: horizontal surface recovers the global horizontal irradiance") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const IrradianceSample s{800 * u(gen), 400 * u(gen), u(gen)};
    const auto p = sun(89 * u(gen), 360 * u(gen), 1320 + 90 * u(gen));
    const double ghi = s.beam_horizontal + s.diffuse_horizontal;
    const double got = hdkr_tilted_irradiance(s, 0, 360 * u(gen), p);
    CHECK(std::abs(got - ghi) <= 1e-9 * std::max(ghi, 1e-300));
  }
}

TEST_CASE("hdkr: hand-computed 45 degree south case") {
  const double expected = 786.6575275895772;
  const double got = hdkr_tilted_irradiance({300, 150, 0.2}, 45, 180, sun(60, 170, 1400));
  CHECK(std::abs(got - expected) / expected < 1e-6);
}

TEST_CASE("hdkr: non-negative on fuzzed inputs") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 1);
  int negatives = 0;
  for (int i = 0; i < 100000; ++i) {
    const IrradianceSample s{1000 * u(gen), 500 * u(gen), u(gen)};
    const double v = hdkr_tilted_irradiance(s, 90 * u(gen), 360 * u(gen), sun(180 * u(gen), 360 * u(gen), 1300 + 120 * u(gen)));
    negatives += !(v >= 0);
  }
  CHECK(negatives == 0);
}

TEST_CASE("hdkr: continuous in tilt away from the clamp") {
  const IrradianceSample s{400, 200, 0.25};
  const auto p = sun(55, 200);
  for (double b = 1; b < 89; b += 1) {
    const double a = hdkr_tilted_irradiance(s, b, 180, p), c = hdkr_tilted_irradiance(s, b + 1e-7, 180, p);
    CHECK(std::abs(a - c) < 1e-3);
  }
}

TEST_CASE("hdkr: sun below the horizon without diffuse leaves the ground term") {
  const IrradianceSample s{50, 0, 0.3};
  const double tilt = 60;
  const double ground = 50 * 0.3 * (1 - std::cos(tilt * M_PI / 180)) / 2;
  CHECK(hdkr_tilted_irradiance(s, tilt, 180, sun(95, 250)) == doctest::Approx(ground).epsilon(1e-12));
  CHECK(beam_ratio(tilt, 180, sun(95, 250)) == 0.0);
  CHECK(beam_ratio(0, 180, sun(60, 250)) == 1.0);
  CHECK(beam_ratio(90, 0, sun(88.9, 0)) <= 10.0);
}

TEST_CASE("weather: save/load round trip") {
  const auto& z = climate().zone(3);
  const auto grid = heating_season_grid(2022);
  const auto w = synth_weather(z, 3, grid.start, grid.start + 10 * 86400);
  const auto dir = fixtures::temp_dir("weather");
  save_weather((dir / "w.csv").string(), w);
  CHECK(load_weather((dir / "w.csv").string()) == w);
}

TEST_CASE("weather: synthesis is deterministic and seasonal") {
  const auto& z = climate().zone(1);
  const auto grid = heating_season_grid(2022);
  const auto a = synth_weather(z, 3, grid.start, grid.at(grid.count - 1));
  CHECK(a == synth_weather(z, 3, grid.start, grid.at(grid.count - 1)));
  CHECK_NOTHROW(validate(a));
  double oct = 0, jan = 0;
  int no = 0, nj = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto m = to_civil(a.time(k)).month;
    if (m == 10) oct += a.t_out[k], ++no;
    if (m == 1) jan += a.t_out[k], ++nj;
  }
  CHECK(jan / nj < oct / no);
}

TEST_CASE("weather: interpolation reproduces samples at the half hours") {
  const auto& z = climate().zone(5);
  const auto grid = heating_season_grid(2022);
  const auto w = synth_weather(z, 8, grid.start, grid.start + 3 * 86400);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto p = interpolate(w, static_cast<double>(w.time(k)));
    REQUIRE(p.t_out == w.t_out[k]);
    REQUIRE(p.irradiance.beam_horizontal == w.beam_h[k]);
    REQUIRE(p.irradiance.diffuse_horizontal == w.diffuse_h[k]);
  }
  const auto mid = interpolate(w, static_cast<double>(w.time(0)) + 900);
  CHECK(mid.t_out == doctest::Approx((w.t_out[0] + w.t_out[1]) / 2));
}

TEST_CASE("weather: malformed files are rejected") {
  const auto& z = climate().zone(2);
  const auto w = synth_weather(z, 1, from_civil({2022, 10, 1}), from_civil({2022, 10, 2}));
  const std::string good = serialize_weather(w);
  auto lines = std::vector<std::string>{};
  std::stringstream ss(good);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  auto rebuild = [&](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& l : v) s += l + "\n";
    return s;
  };
  CHECK(parse_weather_text(good) == w);
  std::size_t first = 0;
  while (lines[first][0] == '#') ++first;
  ++first;  // header
  SUBCASE("wrong step") {
    auto v = lines;
    v.erase(v.begin() + static_cast<std::ptrdiff_t>(first + 2));
    CHECK_THROWS_AS(parse_weather_text(rebuild(v)), ParseError);
  }
  SUBCASE("non-monotone") {
    auto v = lines;
    std::swap(v[first + 2], v[first + 3]);
    CHECK_THROWS_AS(parse_weather_text(rebuild(v)), ParseError);
  }
  SUBCASE("negative irradiance") {
    auto copy = w;
    copy.beam_h[5] = -1;
    CHECK_THROWS_AS(validate(copy), ValidationError);
    CHECK_THROWS(parse_weather_text(serialize_weather(copy)));
  }
}

TEST_CASE("climate table: eight zones covering every shipped department") {
  const auto& t = climate();
  CHECK(t.zones.size() == 8);
  for (const auto& d : synth_departments()) {
    const int id = t.zone_of_department(d).id;
    CHECK(id >= 1);
    CHECK(id <= 8);
  }
  for (const auto& [dept, zone] : t.department_zone) CHECK_NOTHROW(t.zone(zone));
}
