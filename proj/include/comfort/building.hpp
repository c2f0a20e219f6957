#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "comfort/calendar.hpp"
#include "comfort/equipment.hpp"
#include "comfort/solar.hpp"
#include "comfort/survey.hpp"

namespace comfort {

class ClimateTable;

// ---------------------------------------------------------------------------
// Templates and construction records (bundled data files)

struct FacadeGeometry {
  double azimuth_offset = 0;  // plan azimuth, one of 0/90/180/270
  double wall_area = 0;       // gross, window included
  double window_area = 0;
};

struct RoomGeometry {
  std::string name;
  double floor_area = 0;
  double party_wall_area = 0;  // walls shared with a neighbouring dwelling
  bool optional = false;
  std::vector<FacadeGeometry> facades;
};

struct PartitionGeometry {
  std::string room_a, room_b;
  double area = 0;
};

enum class TemplateKind { House, Apartment };

struct BuildingTemplate {
  std::string id;  // "mozart" / "matisse"
  DwellingType dwelling_type = DwellingType::MozartHouse;
  TemplateKind kind = TemplateKind::House;
  double height = 2.5;
  std::vector<RoomGeometry> rooms;
  std::vector<PartitionGeometry> partitions;
  std::vector<MaterialLayer> partition_layers;
  std::vector<MaterialLayer> party_layers;
  std::vector<MaterialLayer> slab_layers;

  const RoomGeometry& room(const std::string& name) const;
  double reference_area(bool with_bedroom2) const;
  /// Adjacency as a map room -> (neighbour -> area); symmetric.
  std::map<std::string, std::map<std::string, double>> adjacency() const;
};

struct TemplateSet {
  std::vector<BuildingTemplate> templates;
  const BuildingTemplate& for_type(DwellingType t) const;
};

TemplateSet load_templates(const std::string& path);
void validate(const BuildingTemplate& t);

struct ConstructionRecord {
  std::string era;
  std::vector<MaterialLayer> wall_layers, roof_layers, floor_layers;
  double h_out = 20;
  double h_in = 7.7;
  double window_u = 0;
  double window_shgc = 0;
  double infiltration_ach = 0;

  /// Air-to-air U-value of the wall stack.
  double wall_u() const;
};

struct ConstructionTable {
  std::vector<ConstructionRecord> records;
};

ConstructionTable load_constructions(const std::string& path);
void validate(const ConstructionRecord& r);
const ConstructionRecord& select_record(const ConstructionTable& table, const std::string& era);

struct HeaterDefaults {
  std::map<HeaterType, double> radiative_fraction;
  double aux_radiative_fraction = 0.2;
  double wood_burn_hours = 3.0;
  double pid_kp_per_kelvin = 0.5;  // fraction of P_nom per K of error
  double pid_ti_seconds = 3600;
  double pid_td_seconds = 0;
  double deadband_half_width = 0.5;
};

HeaterDefaults load_heater_defaults(const std::string& path);

// ---------------------------------------------------------------------------
// Generated model

enum class BoundaryKind { Exterior, Partition, Neighbor, Ground, Adiabatic };
std::string_view to_string(BoundaryKind k);
BoundaryKind parse_boundary_kind(std::string_view s);

/// One opaque assembly seen from `room`. Layers run from the far side (B) to
/// the room side (A).
struct SurfaceSpec {
  std::string name;
  BoundaryKind boundary = BoundaryKind::Exterior;
  double area = 0;
  double tilt = 90;     // deg, 0 = horizontal facing up
  double azimuth = 0;   // deg clockwise from north (exterior only)
  std::string other_room;  // partition only
  std::vector<MaterialLayer> layers;
  double h_in = 7.7;
  double h_out = 20;  // far-side film coefficient
  double solar_absorptance = 0.6;
};

struct WindowSpec {
  double area = 0;
  double azimuth = 0;
  double tilt = 90;
  double u = 0;
  double shgc = 0;
};

struct RoomModel {
  std::string name;
  double floor_area = 0;
  double volume = 0;
  std::vector<SurfaceSpec> surfaces;  // partitions listed in the lower-index room only
  std::vector<WindowSpec> windows;
  HeaterSpec heater;
  ControllerSpec controller;
  double infiltration_ach = 0;
};

struct BuildingModel {
  std::string dwelling_id;
  std::string template_id;
  DwellingType dwelling_type = DwellingType::MozartHouse;
  double scale = 1;
  int orientation = 0;  // 0/90/180/270
  int climate_zone = 0;
  std::string climate_zone_name;
  Site site;
  std::vector<RoomModel> rooms;
  double neighbor_temperature = 19.0;
  double ground_temperature = 10.0;
  double aux_heater_power = 0;
  double aux_radiative_fraction = 0.2;
  std::string aux_room = "living";

  std::size_t room_index(const std::string& name) const;
};

void validate(const BuildingModel& m);

/// Season-long per-room schedules on a shared grid.
struct RoomSchedule {
  std::vector<double> setpoint;
  std::vector<std::uint8_t> presence;
  std::vector<std::uint8_t> window_instruction;
  std::vector<std::uint8_t> shutter_closed;
};

struct ScheduleSet {
  TimeGrid grid;
  std::vector<RoomSchedule> rooms;  // same order as BuildingModel::rooms
  std::vector<std::uint8_t> heating_active;
  std::vector<std::uint8_t> wood_burning;
  std::vector<std::uint8_t> aux_on;
  MonthDay heating_on{10, 15};
  MonthDay heating_off{4, 15};
};

void validate(const ScheduleSet& s, const BuildingModel& m);

// ---------------------------------------------------------------------------
// Operations

/// Literal decision tree for the Mozart house.
int orientation_mozart(const std::map<std::string, bool>& is_south);

/// Window area facing due south for rooms flagged south, at one orientation.
double south_window_area(const BuildingTemplate& t, const std::map<std::string, bool>& is_south, int orientation);
/// Orientation in {0,90,180,270} maximizing south_window_area; ties -> smallest angle.
int orientation_matisse(const BuildingTemplate& t, const std::map<std::string, bool>& is_south);

/// Expands an hourly typical week onto the grid (each hour covers its steps).
template <typename T>
std::vector<T> tile_week(const TypicalWeek<T>& week, const TimeGrid& grid);

/// Shutter state (1 = closed) from a room's presence series and one sunset
/// time per grid day. Per day the shutter opens at the first occupied->empty
/// transition (first occupancy if never emptied) and closes at the occupied
/// step nearest sunset.
std::vector<std::uint8_t> shutter_schedule(const std::vector<std::uint8_t>& presence, const TimeGrid& grid,
                                           const std::vector<Timestamp>& sunsets);

struct GenerationOptions {
  int season_year = 2022;
  double neighbor_temperature = 19.0;
  double ground_temperature = 10.0;
  double solar_absorptance = 0.6;
};

struct GeneratedDwelling {
  BuildingModel model;
  ScheduleSet schedules;
};

GeneratedDwelling build_model(const SurveyRecord& rec, const BuildingTemplate& tmpl,
                              const ConstructionRecord& construction, const ClimateTable& climate,
                              const HeaterDefaults& heaters, const GenerationOptions& opts = {});

/// Structured text (JSON) form of a generated dwelling, one file per dwelling.
std::string serialize_dwelling(const GeneratedDwelling& d);
GeneratedDwelling parse_dwelling(const std::string& text);
void write_dwelling(const std::string& path, const GeneratedDwelling& d);
GeneratedDwelling read_dwelling(const std::string& path);

}  // namespace comfort
