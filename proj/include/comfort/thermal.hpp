#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comfort/building.hpp"
#include "comfort/wall.hpp"
#include "comfort/weather.hpp"

namespace comfort {

struct SimulationOptions {
  double substep = 300;              // s, must divide the output step
  double window_close_delta = 3.0;   // K below setpoint that closes an open window
  double window_ach = 10.0;          // air changes per hour added by an open window
  double furniture_multiplier = 1.0;
  double shutter_solar_factor = 0.1;
  double shutter_u_factor = 0.85;
  double initial_temperature = 18.0;
  double air_rho_c = 1206.0;         // J/(m3 K)
};

void validate(const SimulationOptions& o);

/// Heater command for one step. Holds the integral and deadband memory.
struct ControllerState {
  double integral = 0;
  double previous_error = 0;
  bool has_previous = false;
  bool deadband_on = false;
};

/// Commanded power in [0, p_max]. PID is positional with conditional
/// integration; the deadband switches on at or below setpoint - h and off at
/// or above setpoint + h.
double control(const ControllerSpec& c, ControllerState& s, double setpoint, double t_air, double dt);

/// Next window state given the current one.
bool window_logic(bool is_open, bool instruction, double t_air, double setpoint, double close_delta = 3.0);

/// Linear RC network of one dwelling: zone air nodes plus discretized walls,
/// advanced by implicit Euler.
class ThermalNetwork {
 public:
  struct State {
    std::vector<double> t_air;                 // per room
    std::vector<std::vector<double>> cells;    // per wall
    std::vector<double> surface_a, surface_b;  // per wall, surface node temperatures
  };

  struct Inputs {
    WeatherPoint weather;
    SolarPosition sun;
    std::vector<double> q_conv, q_rad;  // W per room
    std::vector<std::uint8_t> window_open, shutter_closed;
  };

  struct Wall {
    std::string name;
    BoundaryKind boundary = BoundaryKind::Exterior;
    std::size_t room_a = 0;
    std::size_t room_b = 0;  // partitions only
    double tilt = 90, azimuth = 0, absorptance = 0;
    WallAssembly chain;
    double film_a = 0, film_b = 0;  // h * area, W/K
    double g_a = 0, g_b = 0;        // film in series with half a boundary cell
    double split_a = 0, split_b = 0;  // share of a surface flux passed to the cell
    double fixed_b = 0;             // far-side temperature for neighbor/ground
  };

  ThermalNetwork(const BuildingModel& model, const SimulationOptions& opts = {});

  std::size_t rooms() const { return capacity_.size(); }
  const std::vector<Wall>& walls() const { return walls_; }
  double zone_capacity(std::size_t room) const { return capacity_[room]; }

  State initial_state(double temperature) const;
  State step(const State& s, const Inputs& in, double dt) const;

  /// Area-weighted mean of the room's interior opaque surface temperatures
  /// (air temperature for a room without surfaces).
  double mean_radiant(const State& s, std::size_t room) const;
  /// Sum of C*T over every node (J, relative to 0 degC).
  double heat_content(const State& s) const;
  /// Interior surfaces of a room: (wall index, side A?) with their areas.
  const std::vector<std::pair<std::size_t, bool>>& interior_surfaces(std::size_t room) const { return interior_[room]; }

 private:
  struct Factor {
    std::vector<double> c_prime, denom;
    std::vector<double> u, w;  // unit responses to side A / side B air
  };
  void factor(double dt) const;
  void solve(std::size_t wall, std::vector<double>& rhs) const;

  SimulationOptions opts_;
  std::vector<std::vector<WindowSpec>> windows_;
  std::vector<double> volume_, infiltration_;
  std::vector<Wall> walls_;
  std::vector<double> capacity_;
  std::vector<std::vector<std::pair<std::size_t, bool>>> interior_;
  std::vector<double> interior_area_;
  // Factorization cached for the last dt; a network is not shared across threads.
  mutable double factored_dt_ = -1;
  mutable std::vector<Factor> factors_;
};

struct RoomSeries {
  std::string name;
  std::vector<double> t_air, t_mr, t_op, q_conv, q_rad;
  std::vector<std::uint8_t> window_open, presence;
};

struct SimulationResult {
  std::string dwelling_id;
  TimeGrid grid;
  std::vector<double> t_out;
  std::vector<RoomSeries> rooms;

  const RoomSeries& room(const std::string& name) const;
};

/// Season run: internal sub-steps, rows emitted on the schedule grid. Row k is
/// the state at grid time k and the powers/window state applied from there.
SimulationResult simulate(const BuildingModel& model, const ScheduleSet& schedules, const WeatherSeries& weather,
                          const SimulationOptions& opts = {});

std::string serialize_result(const SimulationResult& r);
SimulationResult parse_result(const std::string& text, const std::string& source = "<memory>");
void write_result(const std::string& path, const SimulationResult& r);
SimulationResult read_result(const std::string& path);

}  // namespace comfort
