#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "comfort/building.hpp"
#include "comfort/error.hpp"
#include "comfort/weather.hpp"
#include "fixtures.hpp"

using namespace comfort;

namespace {

struct Data {
  TemplateSet templates = load_templates(fixtures::data_file("templates.json"));
  ConstructionTable constructions = load_constructions(fixtures::data_file("constructions.json"));
  HeaterDefaults heaters = load_heater_defaults(fixtures::data_file("heaters.json"));
  ClimateTable climate = load_climate_table(fixtures::data_file("climate_zones.json"));
};

const Data& data() {
  static const Data d;
  return d;
}

SurveyRecord find_record(DwellingType type, bool with_bedroom2) {
  for (const auto& r : synth_survey(200, 17)) {
    if (r.dwelling_type == type && r.has_bedroom2() == with_bedroom2) return r;
  }
  throw std::runtime_error("no matching synthetic record");
}

GeneratedDwelling generate(const SurveyRecord& r) {
  const auto& d = data();
  return build_model(r, d.templates.for_type(r.dwelling_type), select_record(d.constructions, r.construction_era),
                     d.climate, d.heaters);
}

// Window area per (room, facade offset) read straight from the data file.
std::vector<std::tuple<std::string, int, double>> matisse_windows() {
  std::ifstream in(fixtures::data_file("templates.json"));
  const auto j = nlohmann::json::parse(in);
  std::vector<std::tuple<std::string, int, double>> out;
  for (const auto& t : j["templates"]) {
    if (t["id"] != "matisse") continue;
    for (const auto& r : t["rooms"]) {
      for (const auto& f : r["facades"]) out.emplace_back(r["name"], f["offset"], f["window_area"]);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("orientation_mozart: full truth table") {
  // (living, bedroom2, bedroom3) -> orientation
  const std::vector<std::tuple<bool, bool, bool, int>> table = {
      {true, true, true, 0},     {true, false, true, 0},     {true, true, false, 90},   {true, false, false, 90},
      {false, true, true, 270},  {false, false, true, 180},  {false, true, false, 180}, {false, false, false, 180}};
  for (const auto& [living, b2, b3, expected] : table) {
    CAPTURE(living);
    CAPTURE(b2);
    CAPTURE(b3);
    CHECK(orientation_mozart({{"living", living}, {"bedroom2", b2}, {"bedroom3", b3}}) == expected);
  }
  CHECK_THROWS_AS(orientation_mozart({{"living", true}, {"bedroom3", true}}), ValidationError);
}

TEST_CASE("orientation_matisse") {
  const auto& t = data().templates.for_type(DwellingType::MatisseApartment);
  std::map<std::string, bool> none;
  for (const auto& r : t.rooms) none[r.name] = false;
  CHECK(orientation_matisse(t, none) == 0);

  SUBCASE("single flagged single-facade room faces south") {
    for (const auto& r : t.rooms) {
      if (r.facades.size() != 1 || r.facades[0].window_area <= 0) continue;
      auto flags = none;
      flags[r.name] = true;
      CAPTURE(r.name);
      const int offset = static_cast<int>(r.facades[0].azimuth_offset);
      CHECK(orientation_matisse(t, flags) == ((180 - offset) % 360 + 360) % 360);
    }
  }
  SUBCASE("conflicting flags: exhaustive oracle over four orientations") {
    const auto windows = matisse_windows();
    const std::vector<std::vector<std::string>> cases = {
        {"living", "kitchen"}, {"kitchen", "bedroom2"}, {"living", "bedroom2"}, {"bedroom1", "bedroom2", "living"}};
    for (const auto& flagged : cases) {
      auto flags = none;
      for (const auto& n : flagged) flags[n] = true;
      int best = 0;
      double best_area = -1;
      for (int o : {0, 90, 180, 270}) {
        double a = 0;
        for (const auto& [room, offset, area] : windows) {
          if (flags[room] && (offset + o) % 360 == 180) a += area;
        }
        if (a > best_area) best_area = a, best = o;
      }
      CHECK(orientation_matisse(t, flags) == best);
    }
  }
}

TEST_CASE("shutter_schedule: hand-traced day") {
  TimeGrid grid{from_civil({2022, 12, 1}), kOutputStep, 48};
  std::vector<std::uint8_t> presence(48, 0);
  for (int k = 0; k < 16; ++k) presence[static_cast<std::size_t>(k)] = 1;   // 00:00-08:00
  for (int k = 34; k < 48; ++k) presence[static_cast<std::size_t>(k)] = 1;  // 17:00-24:00
  const Timestamp sunset = grid.start + 17 * 3600 + 1800;
  const auto shut = shutter_schedule(presence, grid, {sunset});
  for (std::size_t k = 0; k < 48; ++k) {
    CAPTURE(k);
    CHECK(shut[k] == ((k >= 16 && k < 35) ? 0 : 1));
  }
}

TEST_CASE("shutter_schedule: unoccupied day stays closed, identical days repeat") {
  TimeGrid grid{from_civil({2022, 12, 1}), kOutputStep, 96};
  std::vector<std::uint8_t> presence(96, 0);
  std::vector<Timestamp> sunsets = {grid.start + 61000, grid.start + 86400 + 61000};
  for (auto v : shutter_schedule(presence, grid, sunsets)) CHECK(v == 1);
  for (std::size_t k = 0; k < 96; ++k) presence[k] = (k % 48 < 14 || k % 48 > 36) ? 1 : 0;
  const auto s = shutter_schedule(presence, grid, sunsets);
  for (std::size_t k = 0; k < 48; ++k) CHECK(s[k] == s[k + 48]);
  CHECK_THROWS_AS(shutter_schedule(presence, grid, {sunsets[0]}), ValidationError);
}

TEST_CASE("shutter_schedule: never open outside the daily window") {
  const auto rec = find_record(DwellingType::MozartHouse, true);
  const auto g = generate(rec);
  const auto& grid = g.schedules.grid;
  for (const auto& rs : g.schedules.rooms) {
    for (std::size_t day = 0; day + 48 <= grid.count; day += 48) {
      // Open steps form one contiguous block inside the day.
      int blocks = 0;
      for (std::size_t k = day; k < day + 48; ++k) {
        if (!rs.shutter_closed[k] && (k == day || rs.shutter_closed[k - 1])) ++blocks;
      }
      CHECK(blocks <= 1);
    }
  }
}

TEST_CASE("select_record: era ordering and unknown era") {
  const auto& table = data().constructions;
  double max_u = 0, min_u = 1e9;
  for (const auto& r : table.records) {
    max_u = std::max(max_u, r.wall_u());
    min_u = std::min(min_u, r.wall_u());
  }
  CHECK(select_record(table, "pre1948").wall_u() == max_u);
  CHECK(select_record(table, "post2012").wall_u() == min_u);
  CHECK_THROWS_AS(select_record(table, "1066"), ValidationError);
}

TEST_CASE("build_model: identity scaling at the reference area") {
  for (auto type : {DwellingType::MozartHouse, DwellingType::MatisseApartment}) {
    for (bool b2 : {true, false}) {
      auto rec = find_record(type, b2);
      const auto& t = data().templates.for_type(type);
      rec.floor_area = t.reference_area(b2);
      const auto g = generate(rec);
      CHECK(g.model.scale == doctest::Approx(1.0).epsilon(1e-15));
      for (const auto& r : g.model.rooms) CHECK(r.floor_area == doctest::Approx(t.room(r.name).floor_area));
    }
  }
}

TEST_CASE("build_model: doubling the floor area doubles every room") {
  auto rec = find_record(DwellingType::MozartHouse, true);
  const auto& t = data().templates.for_type(rec.dwelling_type);
  rec.floor_area = 2 * t.reference_area(true);
  const auto g = generate(rec);
  double total = 0;
  for (const auto& r : g.model.rooms) {
    CHECK(r.floor_area == doctest::Approx(2 * t.room(r.name).floor_area));
    total += r.floor_area;
  }
  CHECK(total == doctest::Approx(rec.floor_area));
}

TEST_CASE("build_model: area fractions do not depend on floor area") {
  auto rec = find_record(DwellingType::MatisseApartment, true);
  std::vector<double> fractions;
  for (double area : {40.0, 63.0, 120.0}) {
    rec.floor_area = area;
    const auto g = generate(rec);
    std::vector<double> f;
    for (const auto& r : g.model.rooms) f.push_back(r.floor_area / area);
    if (fractions.empty()) {
      fractions = f;
    } else {
      for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == doctest::Approx(fractions[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("build_model: full synthetic record passes the model invariants") {
  for (const auto& rec : synth_survey(30, 4)) {
    CAPTURE(rec.dwelling_id);
    const auto g = generate(rec);
    CHECK_NOTHROW(validate(g.model));
    CHECK_NOTHROW(validate(g.schedules, g.model));
    CHECK(g.model.scale > 0);
    const int o = g.model.orientation;
    CHECK((o == 0 || o == 90 || o == 180 || o == 270));
    CHECK(g.schedules.grid == heating_season_grid(2022));
    CHECK(g.schedules.grid.step == 1800);
    for (const auto& r : g.model.rooms) {
      CHECK(r.heater.p_nom == rec.heater_power.at(r.name));
    }
  }
}

TEST_CASE("build_model: tiled setpoints repeat every seven days") {
  const auto g = generate(find_record(DwellingType::MozartHouse, false));
  const std::size_t week = 7 * 48;
  for (const auto& rs : g.schedules.rooms) {
    for (std::size_t k = 0; k + week < rs.setpoint.size(); ++k) REQUIRE(rs.setpoint[k] == rs.setpoint[k + week]);
  }
}

TEST_CASE("build_model: heating active between the on and off dates") {
  auto rec = find_record(DwellingType::MozartHouse, true);
  rec.heating_on.reset();
  rec.heating_off.reset();
  const auto g = generate(rec);
  const auto& s = g.schedules;
  const Timestamp on = from_civil({2022, 10, 15}), off = from_civil({2023, 4, 15});
  for (std::size_t k = 0; k < s.grid.count; ++k) {
    const Timestamp t = s.grid.at(k);
    REQUIRE(s.heating_active[k] == (t >= on && t < off));
  }
}

TEST_CASE("build_model: errors") {
  const auto rec = find_record(DwellingType::MozartHouse, true);
  const auto& d = data();
  CHECK_THROWS_AS(build_model(rec, d.templates.for_type(DwellingType::MatisseApartment),
                              select_record(d.constructions, rec.construction_era), d.climate, d.heaters),
                  ValidationError);
  auto bad = rec;
  bad.n_rooms -= 1;
  CHECK_THROWS_AS(generate(bad), ValidationError);
}

TEST_CASE("dwelling files round trip") {
  const auto g = generate(find_record(DwellingType::MatisseApartment, false));
  const auto text = serialize_dwelling(g);
  CHECK(serialize_dwelling(parse_dwelling(text)) == text);
}

TEST_CASE("template data invariants") {
  for (const auto& t : data().templates.templates) {
    CHECK_NOTHROW(validate(t));
    const auto adj = t.adjacency();
    for (const auto& [a, row] : adj) {
      for (const auto& [b, area] : row) CHECK(adj.at(b).at(a) == area);
    }
    for (const auto& r : t.rooms) {
      for (const auto& f : r.facades) CHECK(std::fmod(f.azimuth_offset, 90.0) == 0.0);
    }
  }
}
