#pragma once

#include "comfort/calendar.hpp"

namespace comfort {

struct SolarPosition {
  double zenith_deg = 0;
  double azimuth_deg = 0;  // clockwise from north, [0, 360)
  double extraterrestrial_normal = 0;  // W/m2
};

/// Site on the local standard-time clock: tz_hours east of UTC.
struct Site {
  double latitude = 0;
  double longitude = 0;
  double tz_hours = 0;
  friend bool operator==(const Site&, const Site&) = default;
};

inline constexpr double kSolarConstant = 1367.0;

/// NOAA solar position (declination, equation of time, hour angle), no refraction.
SolarPosition solar_position(const Site& site, Timestamp t);
/// Overload with fractional seconds, used inside the solver.
SolarPosition solar_position(const Site& site, double t_seconds);

/// Local clock time of apparent solar noon on the day containing `day`.
Timestamp solar_noon(const Site& site, Timestamp day);

/// Sunset (upper limb, standard 0.833 deg refraction) on the day containing
/// `day`. Throws InfeasibleError for polar day or night.
Timestamp sunset_time(const Site& site, Timestamp day);

/// Horizontal irradiance components of one weather sample.
struct IrradianceSample {
  double beam_horizontal = 0;
  double diffuse_horizontal = 0;
  double albedo = 0.2;
};

/// Hay-Davies-Klucher-Reindl transposition onto a surface with tilt in
/// [0, 90] deg and azimuth clockwise from north.
double hdkr_tilted_irradiance(const IrradianceSample& sample, double tilt_deg, double surface_azimuth_deg,
                              const SolarPosition& pos);

/// Geometric beam factor Rb = cos(incidence) / cos(zenith): 1 for horizontal
/// surfaces, 0 past 89 deg zenith, clamped to [0, 10] otherwise.
double beam_ratio(double tilt_deg, double surface_azimuth_deg, const SolarPosition& pos);

}  // namespace comfort
