#include "comfort/building.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "comfort/error.hpp"
#include "comfort/weather.hpp"

namespace comfort {

using nlohmann::json;

namespace {

json read_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot open ") + what + " " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

MaterialLayer layer_from_json(const json& j) {
  MaterialLayer m;
  m.name = j.value("name", "");
  m.conductivity = j.at("conductivity");
  m.density = j.at("density");
  m.specific_heat = j.at("specific_heat");
  m.thickness = j.at("thickness");
  return m;
}

std::vector<MaterialLayer> layers_from_json(const json& j) {
  std::vector<MaterialLayer> out;
  for (const auto& l : j) out.push_back(layer_from_json(l));
  return out;
}

json layer_to_json(const MaterialLayer& m) {
  return {{"name", m.name},
          {"conductivity", m.conductivity},
          {"density", m.density},
          {"specific_heat", m.specific_heat},
          {"thickness", m.thickness}};
}

json layers_to_json(const std::vector<MaterialLayer>& ls) {
  json a = json::array();
  for (const auto& l : ls) a.push_back(layer_to_json(l));
  return a;
}

double layers_resistance(const std::vector<MaterialLayer>& ls) {
  double r = 0;
  for (const auto& l : ls) r += l.thickness / l.conductivity;
  return r;
}

int normalize_angle(double a) {
  int v = static_cast<int>(std::lround(a)) % 360;
  return v < 0 ? v + 360 : v;
}

std::string bits_to_string(const std::vector<std::uint8_t>& v) {
  std::string s(v.size(), '0');
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] ? '1' : '0';
  return s;
}

std::vector<std::uint8_t> bits_from_string(const std::string& s, const char* what) {
  std::vector<std::uint8_t> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw ParseError(std::string(what) + ": expected only 0/1 characters");
    v[i] = s[i] == '1';
  }
  return v;
}

// Calendar time of a month/day inside the season that starts in `year`.
Timestamp season_date(const MonthDay& md, int season_year) {
  const int y = md.month >= 7 ? season_year : season_year + 1;
  return from_civil({y, md.month, md.day});
}

}  // namespace

void validate(const MaterialLayer& m) {
  if (!(m.conductivity > 0 && m.density > 0 && m.specific_heat > 0 && m.thickness > 0) ||
      !std::isfinite(m.conductivity + m.density + m.specific_heat + m.thickness)) {
    throw ValidationError("material '" + m.name + "': conductivity, density, specific heat and thickness must be > 0");
  }
}

void validate(const HeaterSpec& h) {
  if (!(h.p_nom >= 0)) throw ValidationError("heater P_nom must be >= 0");
  if (!(h.radiative_fraction >= 0 && h.radiative_fraction <= 1)) {
    throw ValidationError("heater radiative fraction must lie in [0,1]");
  }
  if (!(h.wood_burn_hours >= 0)) throw ValidationError("wood burn duration must be >= 0");
}

void validate(const ControllerSpec& c) {
  if (!(c.kp >= 0 && c.ki >= 0 && c.kd >= 0)) throw ValidationError("controller gains must be >= 0");
  if (!(c.deadband_half_width > 0)) throw ValidationError("deadband half-width must be > 0");
  if (!(c.p_max >= 0)) throw ValidationError("controller output clamp must be >= 0");
}

// ---------------------------------------------------------------------------

const RoomGeometry& BuildingTemplate::room(const std::string& name) const {
  for (const auto& r : rooms) {
    if (r.name == name) return r;
  }
  throw ValidationError("template " + id + " has no room '" + name + "'");
}

double BuildingTemplate::reference_area(bool with_bedroom2) const {
  double a = 0;
  for (const auto& r : rooms) {
    if (r.optional && !with_bedroom2) continue;
    a += r.floor_area;
  }
  return a;
}

std::map<std::string, std::map<std::string, double>> BuildingTemplate::adjacency() const {
  std::map<std::string, std::map<std::string, double>> adj;
  for (const auto& p : partitions) {
    adj[p.room_a][p.room_b] += p.area;
    adj[p.room_b][p.room_a] += p.area;
  }
  return adj;
}

const BuildingTemplate& TemplateSet::for_type(DwellingType t) const {
  for (const auto& tm : templates) {
    if (tm.dwelling_type == t) return tm;
  }
  throw ValidationError("no template for dwelling type " + std::string(to_string(t)));
}

void validate(const BuildingTemplate& t) {
  auto fail = [&](const std::string& m) { throw ValidationError("template " + t.id + ": " + m); };
  if (t.rooms.empty()) fail("no rooms");
  if (!(t.height > 0)) fail("height must be > 0");
  std::set<std::string> names;
  for (const auto& r : t.rooms) {
    if (!names.insert(r.name).second) fail("duplicate room " + r.name);
    if (!(r.floor_area > 0)) fail("room " + r.name + " floor area must be > 0");
    if (r.party_wall_area < 0) fail("room " + r.name + " party wall area must be >= 0");
    for (const auto& f : r.facades) {
      const int off = static_cast<int>(f.azimuth_offset);
      if (static_cast<double>(off) != f.azimuth_offset || off % 90 != 0 || off < 0 || off >= 360) {
        fail("room " + r.name + " facade offset must be one of 0/90/180/270");
      }
      if (!(f.wall_area > 0) || f.window_area < 0 || f.window_area >= f.wall_area) {
        fail("room " + r.name + " facade areas must satisfy 0 <= window < wall");
      }
    }
  }
  for (const auto& p : t.partitions) {
    if (!names.count(p.room_a) || !names.count(p.room_b)) fail("partition refers to an unknown room");
    if (p.room_a == p.room_b) fail("partition joins a room to itself");
    if (!(p.area > 0)) fail("partition area must be > 0");
  }
  for (const auto* ls : {&t.partition_layers, &t.party_layers, &t.slab_layers}) {
    if (ls->empty()) fail("empty layer stack");
    for (const auto& l : *ls) validate(l);
  }
}

TemplateSet load_templates(const std::string& path) {
  const json j = read_json(path, "template file");
  TemplateSet set;
  try {
    for (const auto& jt : j.at("templates")) {
      BuildingTemplate t;
      t.id = jt.at("id");
      t.dwelling_type = t.id == "mozart" ? DwellingType::MozartHouse : DwellingType::MatisseApartment;
      if (t.id != "mozart" && t.id != "matisse") throw ParseError(path + ": unknown template id " + t.id);
      const std::string kind = jt.at("kind");
      t.kind = kind == "house" ? TemplateKind::House : TemplateKind::Apartment;
      t.height = jt.at("height");
      for (const auto& jr : jt.at("rooms")) {
        RoomGeometry r;
        r.name = jr.at("name");
        r.floor_area = jr.at("floor_area");
        r.party_wall_area = jr.value("party_wall_area", 0.0);
        r.optional = jr.value("optional", false);
        for (const auto& jf : jr.at("facades")) {
          r.facades.push_back({jf.at("offset").get<double>(), jf.at("wall_area").get<double>(),
                               jf.at("window_area").get<double>()});
        }
        t.rooms.push_back(std::move(r));
      }
      for (const auto& jp : jt.at("partitions")) {
        t.partitions.push_back({jp.at("rooms").at(0), jp.at("rooms").at(1), jp.at("area")});
      }
      const json& stacks = j;
      t.partition_layers = layers_from_json(stacks.at("partition_layers"));
      t.party_layers = layers_from_json(stacks.at("party_layers"));
      t.slab_layers = layers_from_json(stacks.at("slab_layers"));
      validate(t);
      set.templates.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return set;
}

double ConstructionRecord::wall_u() const { return 1.0 / (1.0 / h_out + layers_resistance(wall_layers) + 1.0 / h_in); }

void validate(const ConstructionRecord& r) {
  auto fail = [&](const std::string& m) { throw ValidationError("construction record " + r.era + ": " + m); };
  for (const auto* ls : {&r.wall_layers, &r.roof_layers, &r.floor_layers}) {
    if (ls->empty()) fail("empty layer stack");
    for (const auto& l : *ls) validate(l);
  }
  if (!(r.h_out > 0 && r.h_in > 0)) fail("film coefficients must be > 0");
  if (!(r.window_u > 0)) fail("window U must be > 0");
  if (!(r.window_shgc > 0 && r.window_shgc <= 1)) fail("window SHGC must lie in (0,1]");
  if (!(r.infiltration_ach > 0)) fail("infiltration must be > 0");
}

ConstructionTable load_constructions(const std::string& path) {
  const json j = read_json(path, "construction table");
  ConstructionTable t;
  try {
    for (const auto& jr : j.at("records")) {
      ConstructionRecord r;
      r.era = jr.at("era");
      r.wall_layers = layers_from_json(jr.at("wall_layers"));
      r.roof_layers = layers_from_json(jr.at("roof_layers"));
      r.floor_layers = layers_from_json(jr.at("floor_layers"));
      r.h_out = jr.at("h_out");
      r.h_in = jr.at("h_in");
      r.window_u = jr.at("window_u");
      r.window_shgc = jr.at("window_shgc");
      r.infiltration_ach = jr.at("infiltration_ach");
      validate(r);
      t.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return t;
}

const ConstructionRecord& select_record(const ConstructionTable& table, const std::string& era) {
  for (const auto& r : table.records) {
    if (r.era == era) return r;
  }
  throw ValidationError("unknown construction era '" + era + "'");
}

HeaterDefaults load_heater_defaults(const std::string& path) {
  const json j = read_json(path, "heater defaults");
  HeaterDefaults d;
  try {
    for (const auto& [name, frac] : j.at("radiative_fraction").items()) {
      d.radiative_fraction[parse_heater_type(name)] = frac.get<double>();
    }
    d.aux_radiative_fraction = j.at("aux_radiative_fraction");
    d.wood_burn_hours = j.at("wood_burn_hours");
    d.pid_kp_per_kelvin = j.at("pid").at("kp_per_kelvin_of_pnom");
    d.pid_ti_seconds = j.at("pid").at("ti_seconds");
    d.pid_td_seconds = j.at("pid").at("td_seconds");
    d.deadband_half_width = j.at("deadband_half_width");
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (d.radiative_fraction.size() != 6) throw ValidationError(path + ": radiative fraction needed for all 6 heater types");
  return d;
}

// ---------------------------------------------------------------------------

std::string_view to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Exterior: return "exterior";
    case BoundaryKind::Partition: return "partition";
    case BoundaryKind::Neighbor: return "neighbor";
    case BoundaryKind::Ground: return "ground";
    case BoundaryKind::Adiabatic: return "adiabatic";
  }
  return "?";
}

BoundaryKind parse_boundary_kind(std::string_view s) {
  for (auto k : {BoundaryKind::Exterior, BoundaryKind::Partition, BoundaryKind::Neighbor, BoundaryKind::Ground,
                 BoundaryKind::Adiabatic}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError("unknown boundary kind '" + std::string(s) + "'");
}

std::size_t BuildingModel::room_index(const std::string& name) const {
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].name == name) return i;
  }
  throw ValidationError("model " + dwelling_id + " has no room '" + name + "'");
}

void validate(const BuildingModel& m) {
  auto fail = [&](const std::string& msg) { throw ValidationError("model " + m.dwelling_id + ": " + msg); };
  if (!(m.scale > 0)) fail("scale factor must be > 0");
  if (m.orientation != 0 && m.orientation != 90 && m.orientation != 180 && m.orientation != 270) {
    fail("orientation must be one of 0/90/180/270");
  }
  if (m.rooms.empty()) fail("no rooms");
  std::set<std::string> names;
  for (const auto& r : m.rooms) names.insert(r.name);
  for (const auto& r : m.rooms) {
    if (!(r.floor_area > 0 && r.volume > 0)) fail("room " + r.name + " must have positive area and volume");
    if (!(r.infiltration_ach >= 0)) fail("room " + r.name + " infiltration must be >= 0");
    validate(r.heater);
    validate(r.controller);
    for (const auto& s : r.surfaces) {
      if (!(s.area > 0)) fail("surface " + s.name + " area must be > 0");
      if (s.boundary != BoundaryKind::Adiabatic && !(s.h_out > 0)) fail("surface " + s.name + " needs h_out > 0");
      if (!(s.h_in > 0)) fail("surface " + s.name + " needs h_in > 0");
      if (s.boundary == BoundaryKind::Partition && !names.count(s.other_room)) {
        fail("partition " + s.name + " refers to unknown room " + s.other_room);
      }
      if (s.layers.empty()) fail("surface " + s.name + " has no layers");
      for (const auto& l : s.layers) validate(l);
    }
    for (const auto& w : r.windows) {
      if (!(w.area > 0 && w.u > 0 && w.shgc > 0 && w.shgc <= 1)) fail("window in " + r.name + " is not physical");
    }
  }
  if (!(m.aux_heater_power >= 0)) fail("aux heater power must be >= 0");
  if (m.aux_heater_power > 0) (void)m.room_index(m.aux_room);
}

void validate(const ScheduleSet& s, const BuildingModel& m) {
  auto fail = [&](const std::string& msg) { throw ValidationError("schedules of " + m.dwelling_id + ": " + msg); };
  const std::size_t n = s.grid.count;
  if (n == 0 || s.grid.step <= 0) fail("empty grid");
  if (s.rooms.size() != m.rooms.size()) fail("one schedule per room required");
  auto bools = [&](const std::vector<std::uint8_t>& v, const char* what) {
    if (v.size() != n) fail(std::string(what) + " is not on the shared grid");
    for (auto b : v) {
      if (b > 1) fail(std::string(what) + " must be 0/1");
    }
  };
  for (const auto& r : s.rooms) {
    if (r.setpoint.size() != n) fail("setpoint is not on the shared grid");
    for (double v : r.setpoint) {
      if (!std::isfinite(v)) fail("non-finite setpoint");
    }
    bools(r.presence, "presence");
    bools(r.window_instruction, "window instruction");
    bools(r.shutter_closed, "shutter");
  }
  bools(s.heating_active, "heating_active");
  bools(s.wood_burning, "wood_burning");
  bools(s.aux_on, "aux_on");
}

// ---------------------------------------------------------------------------

int orientation_mozart(const std::map<std::string, bool>& is_south) {
  auto flag = [&](const char* room) {
    const auto it = is_south.find(room);
    if (it == is_south.end()) throw ValidationError(std::string("orientation: missing is_south flag for ") + room);
    return it->second;
  };
  const bool living = flag("living");
  const bool bedroom2 = flag("bedroom2");
  const bool bedroom3 = flag("bedroom3");
  if (living) {
    if (bedroom3) return 0;
    return 90;
  }
  if (bedroom2 && bedroom3) return 270;
  return 180;
}

double south_window_area(const BuildingTemplate& t, const std::map<std::string, bool>& is_south, int orientation) {
  double area = 0;
  for (const auto& [room, south] : is_south) {
    if (!south) continue;
    for (const auto& f : t.room(room).facades) {
      if (normalize_angle(f.azimuth_offset + orientation) == 180) area += f.window_area;
    }
  }
  return area;
}

int orientation_matisse(const BuildingTemplate& t, const std::map<std::string, bool>& is_south) {
  for (const auto& r : t.rooms) {
    if (!r.optional && !is_south.count(r.name)) {
      throw ValidationError("orientation: missing is_south flag for " + r.name);
    }
  }
  int best = 0;
  double best_area = -1;
  for (int o : {0, 90, 180, 270}) {
    const double a = south_window_area(t, is_south, o);
    if (a > best_area) best = o, best_area = a;
  }
  return best;
}

template <typename T>
std::vector<T> tile_week(const TypicalWeek<T>& week, const TimeGrid& grid) {
  std::vector<T> out(grid.count);
  for (std::size_t k = 0; k < grid.count; ++k) {
    const Timestamp t = grid.at(k);
    out[k] = week.at(weekday(t), static_cast<int>(seconds_of_day(t) / 3600));
  }
  return out;
}

template std::vector<double> tile_week(const TypicalWeek<double>&, const TimeGrid&);
template std::vector<bool> tile_week(const TypicalWeek<bool>&, const TimeGrid&);

namespace {

std::vector<std::uint8_t> tile_bool(const TypicalWeek<bool>& week, const TimeGrid& grid) {
  const auto v = tile_week(week, grid);
  return {v.begin(), v.end()};
}

}  // namespace

std::vector<std::uint8_t> shutter_schedule(const std::vector<std::uint8_t>& presence, const TimeGrid& grid,
                                           const std::vector<Timestamp>& sunsets) {
  if (presence.size() != grid.count) throw ValidationError("shutter_schedule: presence length differs from the grid");
  if (grid.step <= 0 || kSecondsPerDay % grid.step != 0 || midnight(grid.start) != grid.start) {
    throw ValidationError("shutter_schedule: grid must start at midnight with a step dividing one day");
  }
  const auto per_day = static_cast<std::size_t>(kSecondsPerDay / grid.step);
  const std::size_t days = (grid.count + per_day - 1) / per_day;
  if (sunsets.size() != days) {
    throw ValidationError("shutter_schedule: expected " + std::to_string(days) + " sunsets, got " +
                          std::to_string(sunsets.size()));
  }
  std::vector<std::uint8_t> closed(grid.count, 1);
  for (std::size_t d = 0; d < days; ++d) {
    const std::size_t b = d * per_day, e = std::min(b + per_day, grid.count);
    std::size_t open = e;
    for (std::size_t i = b + 1; i < e; ++i) {
      if (presence[i - 1] && !presence[i]) {
        open = i;
        break;
      }
    }
    if (open == e) {
      for (std::size_t i = b; i < e; ++i) {
        if (presence[i]) {
          open = i;
          break;
        }
      }
    }
    if (open == e) continue;  // never occupied
    std::size_t close = e;
    std::int64_t best = 0;
    for (std::size_t i = b; i < e; ++i) {
      if (!presence[i]) continue;
      const std::int64_t dist = std::abs(grid.at(i) - sunsets[d]);
      if (close == e || dist < best) close = i, best = dist;
    }
    if (close <= open) continue;
    for (std::size_t i = open; i < close; ++i) closed[i] = 0;
  }
  return closed;
}

GeneratedDwelling build_model(const SurveyRecord& rec, const BuildingTemplate& tmpl,
                              const ConstructionRecord& construction, const ClimateTable& climate,
                              const HeaterDefaults& heaters, const GenerationOptions& opts) {
  validate(rec);
  if (rec.dwelling_type != tmpl.dwelling_type) {
    throw ValidationError("dwelling " + rec.dwelling_id + ": template " + tmpl.id + " does not match dwelling type " +
                          std::string(to_string(rec.dwelling_type)));
  }
  const bool with_b2 = rec.has_bedroom2();
  const auto names = rec.rooms();
  std::size_t expected = 0;
  for (const auto& r : tmpl.rooms) expected += (!r.optional || with_b2) ? 1 : 0;
  if (names.size() != expected || static_cast<std::size_t>(rec.n_rooms) != expected) {
    throw ValidationError("dwelling " + rec.dwelling_id + ": n_rooms inconsistent with the bedroom2 flag");
  }

  GeneratedDwelling out;
  BuildingModel& m = out.model;
  m.dwelling_id = rec.dwelling_id;
  m.template_id = tmpl.id;
  m.dwelling_type = rec.dwelling_type;
  m.scale = rec.floor_area / tmpl.reference_area(with_b2);
  const auto& zone = climate.zone_of_department(rec.department);
  m.climate_zone = zone.id;
  m.climate_zone_name = zone.name;
  m.site = zone.site;
  m.neighbor_temperature = opts.neighbor_temperature;
  m.ground_temperature = opts.ground_temperature;

  auto flags = rec.is_south;
  if (tmpl.dwelling_type == DwellingType::MozartHouse) {
    if (!flags.count("bedroom2")) flags["bedroom2"] = false;
    m.orientation = orientation_mozart(flags);
  } else {
    m.orientation = orientation_matisse(tmpl, rec.is_south);
  }

  const bool house = tmpl.kind == TemplateKind::House;
  auto reversed = [](std::vector<MaterialLayer> v) {
    std::reverse(v.begin(), v.end());
    return v;
  };
  std::set<std::string> present(names.begin(), names.end());
  for (const auto& g : tmpl.rooms) {
    if (!present.count(g.name)) continue;
    RoomModel r;
    r.name = g.name;
    r.floor_area = g.floor_area * m.scale;
    r.volume = r.floor_area * tmpl.height;
    r.infiltration_ach = construction.infiltration_ach;
    for (const auto& f : g.facades) {
      const int az = normalize_angle(f.azimuth_offset + m.orientation);
      SurfaceSpec s;
      s.name = g.name + "_wall_" + std::to_string(az);
      s.boundary = BoundaryKind::Exterior;
      s.area = (f.wall_area - f.window_area) * m.scale;
      s.tilt = 90;
      s.azimuth = az;
      s.layers = construction.wall_layers;
      s.h_in = construction.h_in;
      s.h_out = construction.h_out;
      s.solar_absorptance = opts.solar_absorptance;
      r.surfaces.push_back(s);
      if (f.window_area > 0) {
        r.windows.push_back({f.window_area * m.scale, static_cast<double>(az), 90.0, construction.window_u,
                             construction.window_shgc});
      }
    }
    if (g.party_wall_area > 0) {
      SurfaceSpec s;
      s.name = g.name + "_party";
      s.boundary = BoundaryKind::Neighbor;
      s.area = g.party_wall_area * m.scale;
      s.layers = tmpl.party_layers;
      s.h_in = construction.h_in;
      s.h_out = construction.h_in;
      r.surfaces.push_back(s);
    }
    SurfaceSpec floor;
    floor.name = g.name + "_floor";
    floor.area = r.floor_area;
    floor.tilt = 180;
    floor.h_in = construction.h_in;
    SurfaceSpec ceiling = floor;
    ceiling.name = g.name + "_ceiling";
    ceiling.tilt = 0;
    if (house) {
      floor.boundary = BoundaryKind::Ground;
      floor.layers = construction.floor_layers;
      floor.h_out = 3.0;
      ceiling.boundary = BoundaryKind::Exterior;
      ceiling.layers = construction.roof_layers;
      ceiling.h_out = construction.h_out;
      ceiling.solar_absorptance = opts.solar_absorptance;
    } else {
      floor.boundary = BoundaryKind::Neighbor;
      floor.layers = tmpl.slab_layers;
      floor.h_out = construction.h_in;
      ceiling.boundary = BoundaryKind::Neighbor;
      ceiling.layers = reversed(tmpl.slab_layers);
      ceiling.h_out = construction.h_in;
    }
    r.surfaces.push_back(floor);
    r.surfaces.push_back(ceiling);

    const HeaterType type = rec.heater_type.at(g.name);
    r.heater.type = type;
    r.heater.p_nom = rec.heater_power.at(g.name);
    r.heater.radiative_fraction = heaters.radiative_fraction.at(type);
    r.heater.wood_burn_hours = heaters.wood_burn_hours;
    r.controller.kind = type == HeaterType::Wood ? ControllerKind::None : rec.controller_type.at(g.name);
    r.controller.p_max = r.heater.p_nom;
    r.controller.deadband_half_width = heaters.deadband_half_width;
    if (r.controller.kind == ControllerKind::PID) {
      r.controller.kp = heaters.pid_kp_per_kelvin * r.heater.p_nom;
      r.controller.ki = heaters.pid_ti_seconds > 0 ? r.controller.kp / heaters.pid_ti_seconds : 0.0;
      r.controller.kd = r.controller.kp * heaters.pid_td_seconds;
    }
    m.rooms.push_back(std::move(r));
  }
  // Partitions are attached once, to the room listed first in the model.
  for (const auto& p : tmpl.partitions) {
    if (!present.count(p.room_a) || !present.count(p.room_b)) continue;
    const std::size_t ia = m.room_index(p.room_a), ib = m.room_index(p.room_b);
    const std::size_t owner = std::min(ia, ib), other = std::max(ia, ib);
    SurfaceSpec s;
    s.name = m.rooms[owner].name + "_" + m.rooms[other].name;
    s.boundary = BoundaryKind::Partition;
    s.area = p.area * m.scale;
    s.other_room = m.rooms[other].name;
    s.layers = tmpl.partition_layers;
    s.h_in = construction.h_in;
    s.h_out = construction.h_in;
    m.rooms[owner].surfaces.push_back(s);
  }
  m.aux_heater_power = rec.aux_heater_power;
  m.aux_radiative_fraction = heaters.aux_radiative_fraction;
  m.aux_room = "living";
  validate(m);

  ScheduleSet& s = out.schedules;
  s.grid = heating_season_grid(opts.season_year);
  s.heating_on = rec.heating_on.value_or(MonthDay{10, 15});
  s.heating_off = rec.heating_off.value_or(MonthDay{4, 15});
  const Timestamp on = season_date(s.heating_on, opts.season_year);
  const Timestamp off = season_date(s.heating_off, opts.season_year);
  const std::size_t n = s.grid.count;
  s.heating_active.resize(n);
  s.wood_burning.resize(n);
  s.aux_on.resize(n);
  const auto per_day = static_cast<std::size_t>(kSecondsPerDay / s.grid.step);
  std::vector<Timestamp> sunsets;
  for (std::size_t k = 0; k < n; k += per_day) sunsets.push_back(sunset_time(m.site, s.grid.at(k)));
  const double burn = heaters.wood_burn_hours * 3600.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Timestamp t = s.grid.at(k);
    const bool active = t >= on && t < off;
    s.heating_active[k] = active;
    const auto sod = static_cast<double>(seconds_of_day(t));
    bool wood = false;
    for (int h : rec.wood_reload_hours) {
      double since = sod - h * 3600.0;
      if (since < 0) since += kSecondsPerDay;
      wood = wood || since < burn;
    }
    s.wood_burning[k] = active && wood;
    const int hour = static_cast<int>(sod / 3600);
    s.aux_on[k] = active && m.aux_heater_power > 0 &&
                  std::find(rec.aux_heater_hours.begin(), rec.aux_heater_hours.end(), hour) !=
                      rec.aux_heater_hours.end();
  }
  for (const auto& r : m.rooms) {
    RoomSchedule rs;
    rs.setpoint = tile_week(rec.setpoint_profile.at(r.name), s.grid);
    rs.presence = tile_bool(rec.presence_profile.at(r.name), s.grid);
    rs.window_instruction = tile_bool(rec.window_profile.at(r.name), s.grid);
    rs.shutter_closed = shutter_schedule(rs.presence, s.grid, sunsets);
    s.rooms.push_back(std::move(rs));
  }
  validate(s, m);
  return out;
}

// ---------------------------------------------------------------------------
// JSON form

std::string serialize_dwelling(const GeneratedDwelling& d) {
  const auto& m = d.model;
  json jm;
  jm["dwelling_id"] = m.dwelling_id;
  jm["template"] = m.template_id;
  jm["dwelling_type"] = std::string(to_string(m.dwelling_type));
  jm["scale"] = m.scale;
  jm["orientation"] = m.orientation;
  jm["climate_zone"] = m.climate_zone;
  jm["climate_zone_name"] = m.climate_zone_name;
  jm["site"] = {{"latitude", m.site.latitude}, {"longitude", m.site.longitude}, {"tz_hours", m.site.tz_hours}};
  jm["neighbor_temperature"] = m.neighbor_temperature;
  jm["ground_temperature"] = m.ground_temperature;
  jm["aux_heater"] = {{"power", m.aux_heater_power}, {"radiative_fraction", m.aux_radiative_fraction}, {"room", m.aux_room}};
  jm["rooms"] = json::array();
  for (const auto& r : m.rooms) {
    json jr;
    jr["name"] = r.name;
    jr["floor_area"] = r.floor_area;
    jr["volume"] = r.volume;
    jr["infiltration_ach"] = r.infiltration_ach;
    jr["surfaces"] = json::array();
    for (const auto& s : r.surfaces) {
      json js = {{"name", s.name},
                 {"boundary", std::string(to_string(s.boundary))},
                 {"area", s.area},
                 {"tilt", s.tilt},
                 {"azimuth", s.azimuth},
                 {"h_in", s.h_in},
                 {"h_out", s.h_out},
                 {"solar_absorptance", s.solar_absorptance},
                 {"layers", layers_to_json(s.layers)}};
      if (!s.other_room.empty()) js["other_room"] = s.other_room;
      jr["surfaces"].push_back(js);
    }
    jr["windows"] = json::array();
    for (const auto& w : r.windows) {
      jr["windows"].push_back({{"area", w.area}, {"azimuth", w.azimuth}, {"tilt", w.tilt}, {"u", w.u}, {"shgc", w.shgc}});
    }
    jr["heater"] = {{"type", std::string(to_string(r.heater.type))},
                    {"p_nom", r.heater.p_nom},
                    {"radiative_fraction", r.heater.radiative_fraction},
                    {"mobile", r.heater.mobile},
                    {"wood_burn_hours", r.heater.wood_burn_hours}};
    jr["controller"] = {{"kind", std::string(to_string(r.controller.kind))},
                        {"kp", r.controller.kp},
                        {"ki", r.controller.ki},
                        {"kd", r.controller.kd},
                        {"p_max", r.controller.p_max},
                        {"deadband_half_width", r.controller.deadband_half_width}};
    jm["rooms"].push_back(jr);
  }
  const auto& s = d.schedules;
  json js;
  js["start"] = format_iso(s.grid.start);
  js["step"] = s.grid.step;
  js["count"] = s.grid.count;
  js["heating_on"] = format_month_day(s.heating_on);
  js["heating_off"] = format_month_day(s.heating_off);
  js["heating_active"] = bits_to_string(s.heating_active);
  js["wood_burning"] = bits_to_string(s.wood_burning);
  js["aux_on"] = bits_to_string(s.aux_on);
  js["rooms"] = json::array();
  for (std::size_t i = 0; i < s.rooms.size(); ++i) {
    const auto& r = s.rooms[i];
    js["rooms"].push_back({{"name", i < m.rooms.size() ? m.rooms[i].name : std::string()},
                           {"setpoint", r.setpoint},
                           {"presence", bits_to_string(r.presence)},
                           {"window_instruction", bits_to_string(r.window_instruction)},
                           {"shutter_closed", bits_to_string(r.shutter_closed)}});
  }
  json j = {{"format", "comfortsim-dwelling-1"}, {"model", jm}, {"schedules", js}};
  return j.dump(1) + "\n";
}

GeneratedDwelling parse_dwelling(const std::string& text) {
  GeneratedDwelling d;
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "comfortsim-dwelling-1") throw ParseError("dwelling file: unsupported format tag");
    const json& jm = j.at("model");
    auto& m = d.model;
    m.dwelling_id = jm.at("dwelling_id");
    m.template_id = jm.at("template");
    m.dwelling_type = parse_dwelling_type(jm.at("dwelling_type").get<std::string>());
    m.scale = jm.at("scale");
    m.orientation = jm.at("orientation");
    m.climate_zone = jm.at("climate_zone");
    m.climate_zone_name = jm.at("climate_zone_name");
    m.site = {jm.at("site").at("latitude"), jm.at("site").at("longitude"), jm.at("site").at("tz_hours")};
    m.neighbor_temperature = jm.at("neighbor_temperature");
    m.ground_temperature = jm.at("ground_temperature");
    m.aux_heater_power = jm.at("aux_heater").at("power");
    m.aux_radiative_fraction = jm.at("aux_heater").at("radiative_fraction");
    m.aux_room = jm.at("aux_heater").at("room");
    for (const auto& jr : jm.at("rooms")) {
      RoomModel r;
      r.name = jr.at("name");
      r.floor_area = jr.at("floor_area");
      r.volume = jr.at("volume");
      r.infiltration_ach = jr.at("infiltration_ach");
      for (const auto& js : jr.at("surfaces")) {
        SurfaceSpec s;
        s.name = js.at("name");
        s.boundary = parse_boundary_kind(js.at("boundary").get<std::string>());
        s.area = js.at("area");
        s.tilt = js.at("tilt");
        s.azimuth = js.at("azimuth");
        s.h_in = js.at("h_in");
        s.h_out = js.at("h_out");
        s.solar_absorptance = js.at("solar_absorptance");
        s.layers = layers_from_json(js.at("layers"));
        s.other_room = js.value("other_room", "");
        r.surfaces.push_back(std::move(s));
      }
      for (const auto& jw : jr.at("windows")) {
        r.windows.push_back({jw.at("area"), jw.at("azimuth"), jw.at("tilt"), jw.at("u"), jw.at("shgc")});
      }
      const json& jh = jr.at("heater");
      r.heater.type = parse_heater_type(jh.at("type").get<std::string>());
      r.heater.p_nom = jh.at("p_nom");
      r.heater.radiative_fraction = jh.at("radiative_fraction");
      r.heater.mobile = jh.at("mobile");
      r.heater.wood_burn_hours = jh.at("wood_burn_hours");
      const json& jc = jr.at("controller");
      r.controller.kind = parse_controller_kind(jc.at("kind").get<std::string>());
      r.controller.kp = jc.at("kp");
      r.controller.ki = jc.at("ki");
      r.controller.kd = jc.at("kd");
      r.controller.p_max = jc.at("p_max");
      r.controller.deadband_half_width = jc.at("deadband_half_width");
      m.rooms.push_back(std::move(r));
    }
    const json& js = j.at("schedules");
    auto& s = d.schedules;
    s.grid.start = parse_iso(js.at("start").get<std::string>());
    s.grid.step = js.at("step");
    s.grid.count = js.at("count");
    s.heating_on = parse_month_day(js.at("heating_on").get<std::string>());
    s.heating_off = parse_month_day(js.at("heating_off").get<std::string>());
    s.heating_active = bits_from_string(js.at("heating_active"), "heating_active");
    s.wood_burning = bits_from_string(js.at("wood_burning"), "wood_burning");
    s.aux_on = bits_from_string(js.at("aux_on"), "aux_on");
    for (const auto& jr : js.at("rooms")) {
      RoomSchedule r;
      r.setpoint = jr.at("setpoint").get<std::vector<double>>();
      r.presence = bits_from_string(jr.at("presence"), "presence");
      r.window_instruction = bits_from_string(jr.at("window_instruction"), "window_instruction");
      r.shutter_closed = bits_from_string(jr.at("shutter_closed"), "shutter_closed");
      s.rooms.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("dwelling file: ") + e.what());
  }
  validate(d.model);
  validate(d.schedules, d.model);
  return d;
}

void write_dwelling(const std::string& path, const GeneratedDwelling& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_dwelling(d);
}

GeneratedDwelling read_dwelling(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open dwelling file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_dwelling(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace comfort
