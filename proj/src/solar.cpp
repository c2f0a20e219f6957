#include "comfort/solar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "comfort/error.hpp"

namespace comfort {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double wrap360(double x) {
  x = std::fmod(x, 360.0);
  return x < 0 ? x + 360.0 : x;
}

struct SunTerms {
  double declination_deg;
  double equation_of_time_min;
};

// Low-precision solar coordinates from the NOAA solar calculator.
SunTerms sun_terms(double julian_day) {
  const double jc = (julian_day - 2451545.0) / 36525.0;
  const double l0 = wrap360(280.46646 + jc * (36000.76983 + jc * 0.0003032));
  const double m = 357.52911 + jc * (35999.05029 - 0.0001537 * jc);
  const double e = 0.016708634 - jc * (0.000042037 + 0.0000001267 * jc);
  const double c = std::sin(m * kDeg) * (1.914602 - jc * (0.004817 + 0.000014 * jc)) +
                   std::sin(2 * m * kDeg) * (0.019993 - 0.000101 * jc) + std::sin(3 * m * kDeg) * 0.000289;
  const double omega = 125.04 - 1934.136 * jc;
  const double app_long = l0 + c - 0.00569 - 0.00478 * std::sin(omega * kDeg);
  const double eps0 = 23.0 + (26.0 + (21.448 - jc * (46.815 + jc * (0.00059 - jc * 0.001813))) / 60.0) / 60.0;
  const double eps = eps0 + 0.00256 * std::cos(omega * kDeg);
  const double decl = std::asin(std::sin(eps * kDeg) * std::sin(app_long * kDeg)) / kDeg;
  const double y = std::pow(std::tan(eps * kDeg / 2), 2);
  const double l0r = l0 * kDeg, mr = m * kDeg;
  const double eot = 4.0 / kDeg *
                     (y * std::sin(2 * l0r) - 2 * e * std::sin(mr) + 4 * e * y * std::sin(mr) * std::cos(2 * l0r) -
                      0.5 * y * y * std::sin(4 * l0r) - 1.25 * e * e * std::sin(2 * mr));
  return {decl, eot};
}

double julian_day(const Site& site, double t_local) { return (t_local - site.tz_hours * 3600.0) / 86400.0 + 2440587.5; }

double extraterrestrial(double t_local) {
  const int n = day_of_year(static_cast<Timestamp>(std::floor(t_local)));
  return kSolarConstant * (1.0 + 0.033 * std::cos(2 * std::numbers::pi * n / 365.0));
}

}  // namespace

SolarPosition solar_position(const Site& site, double t) {
  const auto terms = sun_terms(julian_day(site, t));
  const double day_start = static_cast<double>(midnight(static_cast<Timestamp>(std::floor(t))));
  const double minutes = (t - day_start) / 60.0;
  const double tst = std::fmod(minutes + terms.equation_of_time_min + 4.0 * site.longitude - 60.0 * site.tz_hours + 2880.0,
                               1440.0);
  const double hour_angle = tst / 4.0 < 0 ? tst / 4.0 + 180.0 : tst / 4.0 - 180.0;
  const double lat = site.latitude * kDeg, decl = terms.declination_deg * kDeg;
  const double cos_z =
      std::clamp(std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(hour_angle * kDeg), -1.0, 1.0);
  const double zenith = std::acos(cos_z) / kDeg;
  const double sin_z = std::sin(zenith * kDeg);
  double azimuth = 0;
  if (sin_z > 1e-12 && std::abs(std::cos(lat)) > 1e-12) {
    const double a = std::clamp((std::sin(lat) * cos_z - std::sin(decl)) / (std::cos(lat) * sin_z), -1.0, 1.0);
    const double acos_a = std::acos(a) / kDeg;
    azimuth = hour_angle > 0 ? wrap360(acos_a + 180.0) : wrap360(540.0 - acos_a);
  }
  if (azimuth >= 360.0) azimuth = 0;
  return {zenith, azimuth, extraterrestrial(t)};
}

SolarPosition solar_position(const Site& site, Timestamp t) { return solar_position(site, static_cast<double>(t)); }

Timestamp solar_noon(const Site& site, Timestamp day) {
  const double d0 = static_cast<double>(midnight(day));
  double noon_min = 720.0;
  for (int it = 0; it < 3; ++it) {
    const auto terms = sun_terms(julian_day(site, d0 + noon_min * 60.0));
    noon_min = 720.0 - 4.0 * site.longitude - terms.equation_of_time_min + site.tz_hours * 60.0;
  }
  return static_cast<Timestamp>(std::llround(d0 + noon_min * 60.0));
}

Timestamp sunset_time(const Site& site, Timestamp day) {
  const double d0 = static_cast<double>(midnight(day));
  const double lat = site.latitude * kDeg;
  double set_min = 1080.0;
  for (int it = 0; it < 4; ++it) {
    const auto terms = sun_terms(julian_day(site, d0 + set_min * 60.0));
    const double decl = terms.declination_deg * kDeg;
    const double c = std::cos(90.833 * kDeg) / (std::cos(lat) * std::cos(decl)) - std::tan(lat) * std::tan(decl);
    if (c < -1.0) throw InfeasibleError("sunset_time: polar day, the sun does not set");
    if (c > 1.0) throw InfeasibleError("sunset_time: polar night, the sun does not rise");
    const double ha = std::acos(c) / kDeg;
    const double noon = 720.0 - 4.0 * site.longitude - terms.equation_of_time_min + site.tz_hours * 60.0;
    set_min = noon + 4.0 * ha;
  }
  return static_cast<Timestamp>(std::llround(d0 + set_min * 60.0));
}

double beam_ratio(double tilt_deg, double surface_azimuth_deg, const SolarPosition& pos) {
  if (tilt_deg == 0.0) return 1.0;
  if (pos.zenith_deg > 89.0) return 0.0;
  const double z = pos.zenith_deg * kDeg, b = tilt_deg * kDeg;
  const double cos_inc =
      std::cos(z) * std::cos(b) + std::sin(z) * std::sin(b) * std::cos((pos.azimuth_deg - surface_azimuth_deg) * kDeg);
  return std::clamp(std::max(cos_inc, 0.0) / std::cos(z), 0.0, 10.0);
}

double hdkr_tilted_irradiance(const IrradianceSample& s, double tilt_deg, double surface_azimuth_deg,
                              const SolarPosition& pos) {
  const double beam = std::max(s.beam_horizontal, 0.0);
  const double diffuse = std::max(s.diffuse_horizontal, 0.0);
  const double global = beam + diffuse;
  if (global <= 0) return 0.0;
  const double cos_z = std::cos(pos.zenith_deg * kDeg);
  const double extra_h = cos_z > 0 ? pos.extraterrestrial_normal * cos_z : 0.0;
  const double anisotropy = extra_h > 0 ? std::min(beam / extra_h, 1.0) : 0.0;
  const double modulation = std::sqrt(beam / global);
  const double b = tilt_deg * kDeg;
  const double rb = beam_ratio(tilt_deg, surface_azimuth_deg, pos);
  const double sky_view = (1 + std::cos(b)) / 2;
  const double ground_view = (1 - std::cos(b)) / 2;
  const double horizon = 1 + modulation * std::pow(std::sin(b / 2), 3);
  const double result = (beam + diffuse * anisotropy) * rb + diffuse * (1 - anisotropy) * sky_view * horizon +
                        global * s.albedo * ground_view;
  return std::max(result, 0.0);
}

}  // namespace comfort
