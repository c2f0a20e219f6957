#include "comfort/weather.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "comfort/csv.hpp"
#include "comfort/error.hpp"

namespace comfort {

void validate(const WeatherSeries& w) {
  const std::size_t n = w.size();
  if (n == 0) throw ValidationError("weather series is empty");
  for (const auto* v : {&w.rh, &w.wind_speed, &w.wind_dir, &w.beam_h, &w.diffuse_h, &w.albedo}) {
    if (v->size() != n) throw ValidationError("weather columns have different lengths");
  }
  if (std::abs(w.site.latitude) > 90) throw ValidationError("weather latitude out of range");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(w.t_out[k])) throw ValidationError("non-finite t_out at sample " + std::to_string(k));
    if (w.beam_h[k] < 0 || w.diffuse_h[k] < 0) {
      throw ValidationError("negative irradiance at sample " + std::to_string(k));
    }
    if (!(w.rh[k] >= 0 && w.rh[k] <= 100)) throw ValidationError("rh outside [0,100] at sample " + std::to_string(k));
    if (!(w.albedo[k] >= 0 && w.albedo[k] <= 1)) {
      throw ValidationError("albedo outside [0,1] at sample " + std::to_string(k));
    }
    if (w.wind_speed[k] < 0) throw ValidationError("negative wind speed at sample " + std::to_string(k));
  }
}

WeatherPoint interpolate(const WeatherSeries& w, double t) {
  const double pos = (t - static_cast<double>(w.start)) / static_cast<double>(kWeatherStep);
  const double last = static_cast<double>(w.size() - 1);
  const double p = std::clamp(pos, 0.0, last);
  auto k = static_cast<std::size_t>(std::floor(p));
  if (k >= w.size() - 1) k = w.size() > 1 ? w.size() - 2 : 0;
  const double f = w.size() > 1 ? p - static_cast<double>(k) : 0.0;
  const std::size_t k1 = w.size() > 1 ? k + 1 : k;
  auto lerp = [&](const std::vector<double>& v) { return f == 0.0 ? v[k] : v[k] + f * (v[k1] - v[k]); };
  WeatherPoint pt;
  pt.t_out = lerp(w.t_out);
  pt.rh = lerp(w.rh);
  pt.wind_speed = lerp(w.wind_speed);
  pt.wind_dir = lerp(w.wind_dir);
  pt.irradiance = {lerp(w.beam_h), lerp(w.diffuse_h), lerp(w.albedo)};
  return pt;
}

std::string serialize_weather(const WeatherSeries& w) {
  std::string out;
  out += "#latitude=" + csv::format_double(w.site.latitude) + "\n";
  out += "#longitude=" + csv::format_double(w.site.longitude) + "\n";
  out += "#tz_hours=" + csv::format_double(w.site.tz_hours) + "\n";
  out += "timestamp,t_out,rh,wind_speed,wind_dir,beam_h,diffuse_h,albedo\n";
  for (std::size_t k = 0; k < w.size(); ++k) {
    out += csv::join_line({format_iso(w.time(k)), csv::format_double(w.t_out[k]), csv::format_double(w.rh[k]),
                           csv::format_double(w.wind_speed[k]), csv::format_double(w.wind_dir[k]),
                           csv::format_double(w.beam_h[k]), csv::format_double(w.diffuse_h[k]),
                           csv::format_double(w.albedo[k])});
    out.push_back('\n');
  }
  return out;
}

void save_weather(const std::string& path, const WeatherSeries& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_weather(w);
}

WeatherSeries parse_weather_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  const auto table = csv::parse(in, source);
  WeatherSeries w;
  bool have_lat = false, have_lon = false;
  for (const auto& c : table.comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    const auto key = c.substr(0, eq);
    const double v = csv::parse_double(c.substr(eq + 1));
    if (key == "latitude") w.site.latitude = v, have_lat = true;
    if (key == "longitude") w.site.longitude = v, have_lon = true;
    if (key == "tz_hours") w.site.tz_hours = v;
  }
  if (!have_lat || !have_lon) throw ParseError(source + ": missing #latitude= / #longitude= metadata lines");
  const std::size_t ct = table.column("timestamp"), c_t = table.column("t_out"), c_rh = table.column("rh"),
                    c_ws = table.column("wind_speed"), c_wd = table.column("wind_dir"), c_b = table.column("beam_h"),
                    c_d = table.column("diffuse_h"), c_a = table.column("albedo");
  Timestamp prev = 0;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& r = table.rows[k];
    const std::string where = source + ":" + std::to_string(table.first_data_line + k);
    try {
      const Timestamp ts = parse_iso(r[ct]);
      if (k == 0) {
        w.start = ts;
      } else {
        if (ts <= prev) throw ParseError("non-monotone timestamps");
        if (ts - prev != kWeatherStep) throw ParseError("time step must be 1800 s, got " + std::to_string(ts - prev));
      }
      prev = ts;
      w.t_out.push_back(csv::parse_double(r[c_t]));
      w.rh.push_back(csv::parse_double(r[c_rh]));
      w.wind_speed.push_back(csv::parse_double(r[c_ws]));
      w.wind_dir.push_back(csv::parse_double(r[c_wd]));
      w.beam_h.push_back(csv::parse_double(r[c_b]));
      w.diffuse_h.push_back(csv::parse_double(r[c_d]));
      w.albedo.push_back(csv::parse_double(r[c_a]));
      if (w.beam_h.back() < 0 || w.diffuse_h.back() < 0) throw ParseError("negative irradiance");
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  validate(w);
  return w;
}

WeatherSeries load_weather(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open weather file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_weather_text(ss.str(), path);
}

const ClimateZone& ClimateTable::zone(int id) const {
  for (const auto& z : zones) {
    if (z.id == id) return z;
  }
  throw ValidationError("unknown climate zone " + std::to_string(id));
}

const ClimateZone& ClimateTable::zone_of_department(const std::string& dept) const {
  const auto it = department_zone.find(dept);
  if (it == department_zone.end()) throw ValidationError("department '" + dept + "' has no climate zone");
  return zone(it->second);
}

ClimateTable load_climate_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open climate table " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  ClimateTable t;
  std::map<std::string, int> by_name;
  for (const auto& z : j.at("zones")) {
    ClimateZone cz;
    cz.id = z.at("id");
    cz.name = z.at("name");
    cz.site = {z.at("latitude"), z.at("longitude"), z.at("tz_hours")};
    cz.mean_temp = z.at("mean_temp");
    cz.seasonal_amplitude = z.at("seasonal_amplitude");
    cz.diurnal_amplitude = z.at("diurnal_amplitude");
    by_name[cz.name] = cz.id;
    t.zones.push_back(cz);
  }
  if (t.zones.size() != 8) throw ValidationError(path + ": expected exactly 8 climate zones");
  for (const auto& [dept, zone] : j.at("departments").items()) {
    const std::string name = zone;
    if (!by_name.count(name)) throw ValidationError(path + ": department " + dept + " maps to unknown zone " + name);
    t.department_zone[dept] = by_name[name];
  }
  return t;
}

WeatherSeries synth_weather(const ClimateZone& zone, std::uint64_t seed, Timestamp start, Timestamp end) {
  if (end < start) throw ValidationError("synth_weather: end before start");
  std::mt19937_64 gen(seed * 1000003ULL + static_cast<std::uint64_t>(zone.id));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  WeatherSeries w;
  w.site = zone.site;
  w.start = start;
  const auto n = static_cast<std::size_t>((end - start) / kWeatherStep) + 1;
  double anomaly = 0, wind_noise = 0, dir_noise = 0;
  double cloud = unit(gen);
  Timestamp current_day = midnight(start);
  constexpr double two_pi = 2 * std::numbers::pi;
  for (std::size_t k = 0; k < n; ++k) {
    const Timestamp t = start + static_cast<std::int64_t>(k) * kWeatherStep;
    if (midnight(t) != current_day) {
      current_day = midnight(t);
      cloud = 0.5 * cloud + 0.5 * unit(gen);
    }
    const double hour = static_cast<double>(seconds_of_day(t)) / 3600.0;
    const double doy = day_of_year(t) + hour / 24.0;
    anomaly = 0.995 * anomaly + 0.15 * normal(gen);
    const double diurnal = std::cos(two_pi * (hour - 15.0) / 24.0);
    const double temp = zone.mean_temp - zone.seasonal_amplitude * std::cos(two_pi * (doy - 20.0) / 365.25) +
                        zone.diurnal_amplitude * (0.6 + 0.4 * cloud) * diurnal + anomaly;

    const auto pos = solar_position(zone.site, t);
    const double cz = std::cos(pos.zenith_deg * std::numbers::pi / 180.0);
    const double clear = cz > 0.01 ? 1098.0 * cz * std::exp(-0.057 / cz) : 0.0;
    const double ghi = clear * (0.2 + 0.8 * cloud);
    const double diffuse_fraction = std::clamp(1.0 - 0.75 * cloud, 0.15, 1.0);

    wind_noise = 0.98 * wind_noise + 0.3 * normal(gen);
    dir_noise = 0.99 * dir_noise + 0.1 * normal(gen);
    w.t_out.push_back(temp);
    w.rh.push_back(std::clamp(78.0 - 12.0 * diurnal + 3.0 * normal(gen), 30.0, 100.0));
    w.wind_speed.push_back(std::abs(3.0 + wind_noise));
    double dir = std::fmod(220.0 + 60.0 * dir_noise, 360.0);
    if (dir < 0) dir += 360.0;
    w.wind_dir.push_back(dir);
    w.beam_h.push_back(ghi * (1.0 - diffuse_fraction));
    w.diffuse_h.push_back(ghi * diffuse_fraction);
    w.albedo.push_back(0.2);
  }
  return w;
}

}  // namespace comfort
