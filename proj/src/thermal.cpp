#include "comfort/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "comfort/csv.hpp"
#include "comfort/error.hpp"

namespace comfort {

void validate(const SimulationOptions& o) {
  if (!(o.substep > 0)) throw ValidationError("solver sub-step must be > 0");
  const double ratio = static_cast<double>(kOutputStep) / o.substep;
  if (std::abs(ratio - std::round(ratio)) > 1e-12) throw ValidationError("solver sub-step must divide 1800 s");
  if (!(o.window_close_delta >= 0)) throw ValidationError("window close threshold must be >= 0");
  if (!(o.window_ach >= 0)) throw ValidationError("window air change rate must be >= 0");
  if (!(o.furniture_multiplier > 0)) throw ValidationError("furniture multiplier must be > 0");
  if (!(o.shutter_solar_factor >= 0 && o.shutter_solar_factor <= 1)) {
    throw ValidationError("shutter solar factor must lie in [0,1]");
  }
  if (!(o.shutter_u_factor > 0)) throw ValidationError("shutter U factor must be > 0");
  if (!(o.air_rho_c > 0)) throw ValidationError("air heat capacity must be > 0");
  if (!std::isfinite(o.initial_temperature)) throw ValidationError("initial temperature must be finite");
}

double control(const ControllerSpec& c, ControllerState& s, double setpoint, double t_air, double dt) {
  switch (c.kind) {
    case ControllerKind::None:
      return 0.0;
    case ControllerKind::Deadband: {
      if (t_air <= setpoint - c.deadband_half_width) s.deadband_on = true;
      if (t_air >= setpoint + c.deadband_half_width) s.deadband_on = false;
      return s.deadband_on ? c.p_max : 0.0;
    }
    case ControllerKind::PID: {
      const double e = setpoint - t_air;
      const double derivative = s.has_previous && dt > 0 ? (e - s.previous_error) / dt : 0.0;
      s.previous_error = e;
      s.has_previous = true;
      const double trial = s.integral + e * dt;
      const double u = c.kp * e + c.ki * trial + c.kd * derivative;
      // Integrate only while the output is not pushed further into saturation.
      if (!((u > c.p_max && e > 0) || (u < 0 && e < 0))) s.integral = trial;
      const double out = c.kp * e + c.ki * s.integral + c.kd * derivative;
      return std::clamp(out, 0.0, c.p_max);
    }
  }
  return 0.0;
}

bool window_logic(bool is_open, bool instruction, double t_air, double setpoint, double close_delta) {
  if (!instruction) return false;
  if (is_open) return !(setpoint - t_air >= close_delta);
  return t_air >= setpoint;
}

// ---------------------------------------------------------------------------

ThermalNetwork::ThermalNetwork(const BuildingModel& model, const SimulationOptions& opts) : opts_(opts) {
  validate(opts);
  const std::size_t nz = model.rooms.size();
  interior_.resize(nz);
  interior_area_.assign(nz, 0.0);
  for (std::size_t r = 0; r < nz; ++r) {
    const auto& room = model.rooms[r];
    capacity_.push_back(opts.air_rho_c * room.volume * opts.furniture_multiplier);
    windows_.push_back(room.windows);
    volume_.push_back(room.volume);
    infiltration_.push_back(room.infiltration_ach);
    for (const auto& s : room.surfaces) {
      Wall w;
      w.name = s.name;
      w.boundary = s.boundary;
      w.room_a = r;
      w.tilt = s.tilt;
      w.azimuth = s.azimuth;
      w.absorptance = s.boundary == BoundaryKind::Exterior ? s.solar_absorptance : 0.0;
      w.chain = discretize_wall(s.layers, s.area);
      const double gc_a = 2.0 / w.chain.resistance.back();
      const double gc_b = 2.0 / w.chain.resistance.front();
      w.film_a = s.h_in * s.area;
      w.g_a = w.film_a * gc_a / (w.film_a + gc_a);
      w.split_a = gc_a / (w.film_a + gc_a);
      if (s.boundary == BoundaryKind::Adiabatic) {
        w.film_b = 0, w.g_b = 0, w.split_b = 1;
      } else {
        w.film_b = s.h_out * s.area;
        w.g_b = w.film_b * gc_b / (w.film_b + gc_b);
        w.split_b = gc_b / (w.film_b + gc_b);
      }
      if (s.boundary == BoundaryKind::Partition) w.room_b = model.room_index(s.other_room);
      if (s.boundary == BoundaryKind::Neighbor) w.fixed_b = model.neighbor_temperature;
      if (s.boundary == BoundaryKind::Ground) w.fixed_b = model.ground_temperature;
      walls_.push_back(std::move(w));
    }
  }
  for (std::size_t j = 0; j < walls_.size(); ++j) {
    const auto& w = walls_[j];
    interior_[w.room_a].push_back({j, true});
    interior_area_[w.room_a] += w.chain.area;
    if (w.boundary == BoundaryKind::Partition) {
      interior_[w.room_b].push_back({j, false});
      interior_area_[w.room_b] += w.chain.area;
    }
  }
  factor(opts.substep);
}

void ThermalNetwork::factor(double dt) const {
  if (dt == factored_dt_) return;
  factors_.assign(walls_.size(), {});
  for (std::size_t j = 0; j < walls_.size(); ++j) {
    const auto& w = walls_[j];
    const std::size_t n = w.chain.size();
    auto& f = factors_[j];
    f.c_prime.assign(n, 0.0);
    f.denom.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double diag = w.chain.capacity[i] / dt;
      if (i > 0) diag += w.chain.conductance[i - 1];
      if (i + 1 < n) diag += w.chain.conductance[i];
      if (i == 0) diag += w.g_b;
      if (i + 1 == n) diag += w.g_a;
      const double lower = i > 0 ? -w.chain.conductance[i - 1] : 0.0;
      const double upper = i + 1 < n ? -w.chain.conductance[i] : 0.0;
      f.denom[i] = diag - (i > 0 ? lower * f.c_prime[i - 1] : 0.0);
      f.c_prime[i] = upper / f.denom[i];
    }
    f.u.assign(n, 0.0);
    f.u[n - 1] = w.g_a;
    solve(j, f.u);
    f.w.assign(n, 0.0);
    if (w.boundary == BoundaryKind::Partition) {
      f.w[0] = w.g_b;
      solve(j, f.w);
    }
  }
  factored_dt_ = dt;
}

void ThermalNetwork::solve(std::size_t j, std::vector<double>& d) const {
  const auto& w = walls_[j];
  const auto& f = factors_[j];
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double lower = i > 0 ? -w.chain.conductance[i - 1] : 0.0;
    d[i] = (d[i] - (i > 0 ? lower * d[i - 1] : 0.0)) / f.denom[i];
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= f.c_prime[i] * d[i + 1];
}

ThermalNetwork::State ThermalNetwork::initial_state(double temperature) const {
  State s;
  s.t_air.assign(rooms(), temperature);
  for (const auto& w : walls_) s.cells.emplace_back(w.chain.size(), temperature);
  s.surface_a.assign(walls_.size(), temperature);
  s.surface_b.assign(walls_.size(), temperature);
  return s;
}

ThermalNetwork::State ThermalNetwork::step(const State& s, const Inputs& in, double dt) const {
  if (!(dt > 0)) throw ValidationError("step: dt must be > 0");
  factor(dt);
  const std::size_t nz = rooms();
  const double t_out = in.weather.t_out;

  // Transmitted solar and radiative heater gains per room.
  std::vector<double> radiant(nz, 0.0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nz), static_cast<Eigen::Index>(nz));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nz));
  for (std::size_t r = 0; r < nz; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    const bool shut = !in.shutter_closed.empty() && in.shutter_closed[r];
    const bool open = !in.window_open.empty() && in.window_open[r];
    double ua = 0, solar = 0;
    for (const auto& win : windows_[r]) {
      ua += win.u * win.area * (shut ? opts_.shutter_u_factor : 1.0);
      const double i_tilt = hdkr_tilted_irradiance(in.weather.irradiance, win.tilt, win.azimuth, in.sun);
      solar += win.shgc * i_tilt * win.area * (shut ? opts_.shutter_solar_factor : 1.0);
    }
    const double vent = opts_.air_rho_c * volume_[r] * (infiltration_[r] + (open ? opts_.window_ach : 0.0)) / 3600.0;
    radiant[r] = solar + (in.q_rad.empty() ? 0.0 : in.q_rad[r]);
    a(ri, ri) += capacity_[r] / dt + ua + vent;
    b(ri) += capacity_[r] / dt * s.t_air[r] + (ua + vent) * t_out + (in.q_conv.empty() ? 0.0 : in.q_conv[r]);
    if (interior_area_[r] <= 0) b(ri) += radiant[r];
  }
  auto share = [&](std::size_t room, double area) {
    return interior_area_[room] > 0 ? radiant[room] * area / interior_area_[room] : 0.0;
  };

  std::vector<std::vector<double>> p(walls_.size());
  std::vector<double> q_a(walls_.size()), q_b(walls_.size()), far(walls_.size(), 0.0);
  for (std::size_t j = 0; j < walls_.size(); ++j) {
    const auto& w = walls_[j];
    const std::size_t n = w.chain.size();
    q_a[j] = share(w.room_a, w.chain.area);
    q_b[j] = 0;
    switch (w.boundary) {
      case BoundaryKind::Exterior:
        far[j] = t_out;
        q_b[j] = w.absorptance * w.chain.area *
                 hdkr_tilted_irradiance(in.weather.irradiance, w.tilt, w.azimuth, in.sun);
        break;
      case BoundaryKind::Partition:
        q_b[j] = share(w.room_b, w.chain.area);
        break;
      case BoundaryKind::Neighbor:
      case BoundaryKind::Ground:
        far[j] = w.fixed_b;
        break;
      case BoundaryKind::Adiabatic:
        break;
    }
    auto& pj = p[j];
    pj.resize(n);
    for (std::size_t i = 0; i < n; ++i) pj[i] = w.chain.capacity[i] / dt * s.cells[j][i];
    pj[n - 1] += w.split_a * q_a[j];
    pj[0] += w.split_b * q_b[j];
    if (w.boundary != BoundaryKind::Partition) pj[0] += w.g_b * far[j];
    solve(j, pj);

    const auto& f = factors_[j];
    const auto ia = static_cast<Eigen::Index>(w.room_a);
    a(ia, ia) += w.g_a - w.g_a * f.u[n - 1];
    b(ia) += w.g_a * pj[n - 1] + (1 - w.split_a) * q_a[j];
    if (w.boundary == BoundaryKind::Partition) {
      const auto ib = static_cast<Eigen::Index>(w.room_b);
      a(ia, ib) -= w.g_a * f.w[n - 1];
      a(ib, ib) += w.g_b - w.g_b * f.w[0];
      a(ib, ia) -= w.g_b * f.u[0];
      b(ib) += w.g_b * pj[0] + (1 - w.split_b) * q_b[j];
    }
  }

  const Eigen::VectorXd t = a.partialPivLu().solve(b);
  State next;
  next.t_air.assign(t.data(), t.data() + t.size());
  next.cells.resize(walls_.size());
  next.surface_a.resize(walls_.size());
  next.surface_b.resize(walls_.size());
  for (std::size_t j = 0; j < walls_.size(); ++j) {
    const auto& w = walls_[j];
    const auto& f = factors_[j];
    const std::size_t n = w.chain.size();
    const double ta = next.t_air[w.room_a];
    const double tb = w.boundary == BoundaryKind::Partition ? next.t_air[w.room_b] : 0.0;
    auto& c = next.cells[j];
    c.resize(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = p[j][i] + f.u[i] * ta + f.w[i] * tb;
    const double gc_a = 2.0 / w.chain.resistance.back();
    const double gc_b = 2.0 / w.chain.resistance.front();
    next.surface_a[j] = (w.film_a * ta + gc_a * c[n - 1] + q_a[j]) / (w.film_a + gc_a);
    const double t_far = w.boundary == BoundaryKind::Partition ? tb : far[j];
    next.surface_b[j] = (w.film_b * t_far + gc_b * c[0] + q_b[j]) / (w.film_b + gc_b);
  }
  return next;
}

double ThermalNetwork::mean_radiant(const State& s, std::size_t room) const {
  if (interior_area_[room] <= 0) return s.t_air[room];
  double sum = 0;
  for (const auto& [j, side_a] : interior_[room]) {
    sum += walls_[j].chain.area * (side_a ? s.surface_a[j] : s.surface_b[j]);
  }
  return sum / interior_area_[room];
}

double ThermalNetwork::heat_content(const State& s) const {
  double e = 0;
  for (std::size_t r = 0; r < rooms(); ++r) e += capacity_[r] * s.t_air[r];
  for (std::size_t j = 0; j < walls_.size(); ++j) {
    for (std::size_t i = 0; i < walls_[j].chain.size(); ++i) e += walls_[j].chain.capacity[i] * s.cells[j][i];
  }
  return e;
}

// ---------------------------------------------------------------------------

const RoomSeries& SimulationResult::room(const std::string& name) const {
  for (const auto& r : rooms) {
    if (r.name == name) return r;
  }
  throw ValidationError("simulation result has no room '" + name + "'");
}

SimulationResult simulate(const BuildingModel& model, const ScheduleSet& schedules, const WeatherSeries& weather,
                          const SimulationOptions& opts) {
  validate(model);
  validate(schedules, model);
  validate(opts);
  const TimeGrid& grid = schedules.grid;
  const std::size_t n = grid.count;
  if (grid.step != kOutputStep) throw ValidationError("schedule grid step must be 1800 s");
  if (weather.size() == 0 || weather.start > grid.start || weather.end() < grid.at(n - 1)) {
    throw ValidationError("weather series " + format_iso(weather.start) + ".." + format_iso(weather.end()) +
                          " does not cover the simulated span " + format_iso(grid.start) + ".." +
                          format_iso(grid.at(n - 1)));
  }
  const ThermalNetwork net(model, opts);
  const std::size_t nz = model.rooms.size();
  const auto sub = static_cast<std::size_t>(std::llround(static_cast<double>(grid.step) / opts.substep));
  const double dt = opts.substep;
  const std::size_t aux_room = model.aux_heater_power > 0 ? model.room_index(model.aux_room) : 0;

  SimulationResult res;
  res.dwelling_id = model.dwelling_id;
  res.grid = grid;
  res.t_out.resize(n);
  res.rooms.resize(nz);
  for (std::size_t r = 0; r < nz; ++r) {
    auto& rs = res.rooms[r];
    rs.name = model.rooms[r].name;
    for (auto* v : {&rs.t_air, &rs.t_mr, &rs.t_op, &rs.q_conv, &rs.q_rad}) v->resize(n);
    rs.window_open.resize(n);
    rs.presence = schedules.rooms[r].presence;
  }

  auto state = net.initial_state(opts.initial_temperature);
  std::vector<ControllerState> ctrl(nz);
  std::vector<std::uint8_t> window(nz, 0);
  ThermalNetwork::Inputs in;
  in.q_conv.resize(nz);
  in.q_rad.resize(nz);
  in.window_open.resize(nz);
  in.shutter_closed.resize(nz);

  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t r = 0; r < nz; ++r) in.shutter_closed[r] = schedules.rooms[r].shutter_closed[k];
    for (std::size_t s = 0; s < sub; ++s) {
      const double t0 = static_cast<double>(grid.at(k)) + static_cast<double>(s) * dt;
      for (std::size_t r = 0; r < nz; ++r) {
        const auto& room = model.rooms[r];
        const auto& sched = schedules.rooms[r];
        const double sp = sched.setpoint[k];
        window[r] = window_logic(window[r], sched.window_instruction[k], state.t_air[r], sp, opts.window_close_delta);
        double p = 0;
        if (room.heater.type == HeaterType::Wood) {
          p = schedules.wood_burning[k] ? room.heater.p_nom : 0.0;
        } else if (schedules.heating_active[k]) {
          p = control(room.controller, ctrl[r], sp, state.t_air[r], dt);
        }
        const double rf = room.heater.radiative_fraction;
        in.q_conv[r] = (1 - rf) * p;
        in.q_rad[r] = rf * p;
        in.window_open[r] = window[r];
      }
      if (schedules.aux_on[k] && model.aux_heater_power > 0) {
        in.q_conv[aux_room] += (1 - model.aux_radiative_fraction) * model.aux_heater_power;
        in.q_rad[aux_room] += model.aux_radiative_fraction * model.aux_heater_power;
      }
      if (s == 0) {
        res.t_out[k] = interpolate(weather, t0).t_out;
        for (std::size_t r = 0; r < nz; ++r) {
          auto& rs = res.rooms[r];
          rs.t_air[k] = state.t_air[r];
          rs.t_mr[k] = net.mean_radiant(state, r);
          rs.t_op[k] = (rs.t_air[k] + rs.t_mr[k]) / 2;
          rs.q_conv[k] = in.q_conv[r];
          rs.q_rad[k] = in.q_rad[r];
          rs.window_open[k] = window[r];
        }
        if (k + 1 == n) break;
      }
      const double t1 = t0 + dt;
      in.weather = interpolate(weather, t1);
      in.sun = solar_position(weather.site, t1);
      state = net.step(state, in, dt);
      for (double v : state.t_air) {
        if (!std::isfinite(v)) {
          throw SimulationError(model.dwelling_id, k, "non-finite zone temperature at " + format_iso(grid.at(k)));
        }
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kRoomColumns[] = {"t_air", "t_mr", "t_op", "q_conv", "q_rad", "window_open", "presence"};

}  // namespace

std::string serialize_result(const SimulationResult& r) {
  std::string out = "#dwelling_id=" + r.dwelling_id + "\n";
  std::vector<std::string> header = {"timestamp", "t_out"};
  for (const auto& room : r.rooms) {
    for (const char* c : kRoomColumns) header.push_back(room.name + "." + c);
  }
  out += csv::join_line(header) + "\n";
  for (std::size_t k = 0; k < r.grid.count; ++k) {
    out += format_iso(r.grid.at(k));
    out += ',';
    out += csv::format_double(r.t_out[k]);
    for (const auto& room : r.rooms) {
      for (double v : {room.t_air[k], room.t_mr[k], room.t_op[k], room.q_conv[k], room.q_rad[k]}) {
        out += ',';
        out += csv::format_double(v);
      }
      out += room.window_open[k] ? ",1" : ",0";
      out += room.presence[k] ? ",1" : ",0";
    }
    out += '\n';
  }
  return out;
}

SimulationResult parse_result(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  const auto table = csv::parse(in, source);
  SimulationResult r;
  for (const auto& c : table.comments) {
    if (c.rfind("dwelling_id=", 0) == 0) r.dwelling_id = c.substr(12);
  }
  const auto& h = table.header;
  constexpr std::size_t per_room = std::size(kRoomColumns);
  if (h.size() < 2 || h[0] != "timestamp" || h[1] != "t_out" || (h.size() - 2) % per_room != 0) {
    throw ParseError(source + ": header does not match the simulation result schema");
  }
  const std::size_t nz = (h.size() - 2) / per_room;
  r.rooms.resize(nz);
  for (std::size_t z = 0; z < nz; ++z) {
    const std::string& first = h[2 + z * per_room];
    const auto dot = first.rfind('.');
    if (dot == std::string::npos) throw ParseError(source + ": bad column " + first);
    r.rooms[z].name = first.substr(0, dot);
    for (std::size_t c = 0; c < per_room; ++c) {
      if (h[2 + z * per_room + c] != r.rooms[z].name + "." + kRoomColumns[c]) {
        throw ParseError(source + ": expected column " + r.rooms[z].name + "." + kRoomColumns[c]);
      }
    }
  }
  const std::size_t n = table.rows.size();
  r.t_out.resize(n);
  for (auto& room : r.rooms) {
    for (auto* v : {&room.t_air, &room.t_mr, &room.t_op, &room.q_conv, &room.q_rad}) v->resize(n);
    room.window_open.resize(n);
    room.presence.resize(n);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& row = table.rows[k];
    try {
      const Timestamp t = parse_iso(row[0]);
      if (k == 0) r.grid.start = t;
      if (t != r.grid.start + static_cast<std::int64_t>(k) * kOutputStep) throw ParseError("row is off the 1800 s grid");
      r.t_out[k] = csv::parse_double(row[1]);
      for (std::size_t z = 0; z < nz; ++z) {
        const std::size_t b = 2 + z * per_room;
        auto& room = r.rooms[z];
        room.t_air[k] = csv::parse_double(row[b]);
        room.t_mr[k] = csv::parse_double(row[b + 1]);
        room.t_op[k] = csv::parse_double(row[b + 2]);
        room.q_conv[k] = csv::parse_double(row[b + 3]);
        room.q_rad[k] = csv::parse_double(row[b + 4]);
        room.window_open[k] = static_cast<std::uint8_t>(csv::parse_long(row[b + 5]) != 0);
        room.presence[k] = static_cast<std::uint8_t>(csv::parse_long(row[b + 6]) != 0);
      }
    } catch (const ParseError& e) {
      throw ParseError(source + ":" + std::to_string(table.first_data_line + k) + ": " + e.what());
    }
  }
  r.grid.step = kOutputStep;
  r.grid.count = n;
  return r;
}

void write_result(const std::string& path, const SimulationResult& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_result(r);
}

SimulationResult read_result(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open simulation result " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_result(ss.str(), path);
}

}  // namespace comfort
