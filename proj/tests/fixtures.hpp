#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "comfort/building.hpp"
#include "comfort/weather.hpp"

namespace fixtures {

inline comfort::MaterialLayer layer(double k, double rho, double cp, double t, const std::string& name = "m") {
  return {name, k, rho, cp, t};
}

inline comfort::SurfaceSpec surface(comfort::BoundaryKind kind, double area, std::vector<comfort::MaterialLayer> l,
                                    double h_in = 7.7, double h_out = 20) {
  comfort::SurfaceSpec s;
  s.name = "wall";
  s.boundary = kind;
  s.area = area;
  s.layers = std::move(l);
  s.h_in = h_in;
  s.h_out = h_out;
  return s;
}

/// One room, no windows, no infiltration, no heater.
inline comfort::BuildingModel single_zone(std::vector<comfort::SurfaceSpec> surfaces, double volume = 50) {
  comfort::BuildingModel m;
  m.dwelling_id = "T0001";
  m.template_id = "test";
  m.climate_zone = 1;
  m.site = {48.85, 2.35, 1};
  comfort::RoomModel r;
  r.name = "living";
  r.floor_area = volume / 2.5;
  r.volume = volume;
  r.surfaces = std::move(surfaces);
  r.infiltration_ach = 0;
  m.rooms.push_back(r);
  return m;
}

/// Constant temperature, no sun.
inline comfort::WeatherSeries constant_weather(double t_out, comfort::Timestamp start, std::size_t n) {
  comfort::WeatherSeries w;
  w.site = {48.85, 2.35, 1};
  w.start = start;
  w.t_out.assign(n, t_out);
  w.rh.assign(n, 80);
  w.wind_speed.assign(n, 2);
  w.wind_dir.assign(n, 180);
  w.beam_h.assign(n, 0);
  w.diffuse_h.assign(n, 0);
  w.albedo.assign(n, 0.2);
  return w;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("comfort_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string data_file(const std::string& name) { return std::string(COMFORT_DATA_DIR) + "/" + name; }

}  // namespace fixtures
