#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "comfort/calendar.hpp"
#include "comfort/solar.hpp"

namespace comfort {

inline constexpr std::int64_t kWeatherStep = 1800;

struct WeatherSeries {
  Site site;
  Timestamp start = 0;
  std::vector<double> t_out;       // degC
  std::vector<double> rh;          // %
  std::vector<double> wind_speed;  // m/s
  std::vector<double> wind_dir;    // deg
  std::vector<double> beam_h;      // W/m2
  std::vector<double> diffuse_h;   // W/m2
  std::vector<double> albedo;

  std::size_t size() const { return t_out.size(); }
  Timestamp time(std::size_t k) const { return start + static_cast<std::int64_t>(k) * kWeatherStep; }
  Timestamp end() const { return size() ? time(size() - 1) : start; }
  friend bool operator==(const WeatherSeries&, const WeatherSeries&) = default;
};

/// Throws ValidationError if an invariant is broken.
void validate(const WeatherSeries& w);

/// Linearly interpolated conditions at time t (clamped to the series span).
struct WeatherPoint {
  double t_out = 0, rh = 0, wind_speed = 0, wind_dir = 0;
  IrradianceSample irradiance;
};
WeatherPoint interpolate(const WeatherSeries& w, double t_seconds);

WeatherSeries load_weather(const std::string& path);
void save_weather(const std::string& path, const WeatherSeries& w);
std::string serialize_weather(const WeatherSeries& w);
WeatherSeries parse_weather_text(const std::string& text, const std::string& source = "<memory>");

struct ClimateZone {
  int id = 0;            // 1..8
  std::string name;      // H1a ...
  Site site;
  double mean_temp = 0;  // annual mean, degC
  double seasonal_amplitude = 0;
  double diurnal_amplitude = 0;
};

struct ClimateTable {
  std::vector<ClimateZone> zones;
  std::map<std::string, int> department_zone;

  const ClimateZone& zone(int id) const;
  const ClimateZone& zone_of_department(const std::string& dept) const;
};

ClimateTable load_climate_table(const std::string& path);

/// Deterministic seasonal + diurnal temperature, clear-sky irradiance scaled
/// by a seeded cloudiness process; samples on [start, end] at 30 min.
WeatherSeries synth_weather(const ClimateZone& zone, std::uint64_t seed, Timestamp start, Timestamp end);

}  // namespace comfort
