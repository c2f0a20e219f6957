#pragma once

#include <string>
#include <vector>

#include "comfort/survey.hpp"

namespace comfort {

struct MaterialLayer {
  std::string name;
  double conductivity = 0;   // W/(m K)
  double density = 0;        // kg/m3
  double specific_heat = 0;  // J/(kg K)
  double thickness = 0;      // m
  friend bool operator==(const MaterialLayer&, const MaterialLayer&) = default;
};

struct HeaterSpec {
  HeaterType type = HeaterType::Convector;
  double p_nom = 0;  // W, sum of the room's fixed heaters
  double radiative_fraction = 0.1;
  bool mobile = false;
  double wood_burn_hours = 3.0;
  friend bool operator==(const HeaterSpec&, const HeaterSpec&) = default;
};

struct ControllerSpec {
  ControllerKind kind = ControllerKind::None;
  double kp = 0;  // W/K
  double ki = 0;  // W/(K s)
  double kd = 0;  // W s/K
  double p_max = 0;
  double deadband_half_width = 0.5;  // K
  friend bool operator==(const ControllerSpec&, const ControllerSpec&) = default;
};

void validate(const MaterialLayer& m);
void validate(const HeaterSpec& h);
void validate(const ControllerSpec& c);

}  // namespace comfort
