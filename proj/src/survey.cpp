#include "comfort/survey.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "comfort/csv.hpp"
#include "comfort/error.hpp"

namespace comfort {

namespace {

constexpr std::array<std::string_view, 2> kDwellingNames = {"mozart", "matisse"};
constexpr std::array<std::string_view, 6> kHeaterNames = {"convector",    "radiant_panel", "soft_heat",
                                                          "accumulation", "water",         "wood"};
constexpr std::array<std::string_view, 3> kControllerNames = {"pid", "deadband", "none"};
constexpr std::array<std::string_view, 5> kComfortNames = {"comfortable", "cold_24h", "cold_few_days",
                                                           "cold_almost_always", "cold_always"};

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::string_view, N>& names, std::string_view what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  throw ParseError("unknown " + std::string(what) + " literal '" + std::string(s) + "'");
}

const std::vector<std::string> kBaseColumns = {
    "dwelling_id",      "dwelling_type",     "n_rooms",         "floor_area",     "construction_era",
    "department",       "heating_on",        "heating_off",     "aux_heater_power", "aux_heater_hours",
    "wood_reload_hours", "comfort_answer",   "avg_age",         "gender_ratio"};
const std::vector<std::string> kRoomFields = {"is_south", "heater_power", "heater_type", "controller",
                                              "setpoint", "presence",     "window"};

std::string room_column(std::string_view field, std::string_view room) {
  return std::string(field) + "_" + std::string(room);
}

std::vector<int> parse_hours(std::string_view s) {
  std::vector<int> out;
  if (s.empty()) return out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find(';', pos);
    const auto tok = s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    const long h = csv::parse_long(tok);
    if (h < 0 || h > 23) throw ParseError("hour out of range: " + std::string(tok));
    out.push_back(static_cast<int>(h));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string format_hours(const std::vector<int>& hours) {
  std::string out;
  for (std::size_t i = 0; i < hours.size(); ++i) {
    if (i) out.push_back(';');
    out += std::to_string(hours[i]);
  }
  return out;
}

TypicalWeek<double> parse_setpoint_week(std::string_view s) {
  TypicalWeek<double> w;
  std::istringstream in{std::string(s)};
  std::string tok;
  std::size_t n = 0;
  while (in >> tok) {
    if (n >= 72) throw ParseError("setpoint profile has more than 72 values");
    w.days[n / 24][n % 24] = csv::parse_double(tok);
    ++n;
  }
  if (n != 72) throw ParseError("setpoint profile needs 72 values, got " + std::to_string(n));
  return w;
}

std::string format_setpoint_week(const TypicalWeek<double>& w) {
  std::string out;
  for (int d = 0; d < 3; ++d) {
    for (int h = 0; h < 24; ++h) {
      if (d || h) out.push_back(' ');
      out += csv::format_double(w.days[d][h]);
    }
  }
  return out;
}

TypicalWeek<bool> parse_bool_week(std::string_view s) {
  if (s.size() != 72) throw ParseError("boolean profile needs 72 characters of 0/1, got " + std::to_string(s.size()));
  TypicalWeek<bool> w;
  for (std::size_t i = 0; i < 72; ++i) {
    if (s[i] != '0' && s[i] != '1') throw ParseError("boolean profile may only contain 0/1");
    w.days[i / 24][i % 24] = s[i] == '1';
  }
  return w;
}

std::string format_bool_week(const TypicalWeek<bool>& w) {
  std::string out(72, '0');
  for (std::size_t i = 0; i < 72; ++i) out[i] = w.days[i / 24][i % 24] ? '1' : '0';
  return out;
}

// Values of the 96 metropolitan departments.
const std::vector<std::string> kDepartments = [] {
  std::vector<std::string> d;
  for (int i = 1; i <= 95; ++i) {
    if (i == 20) {
      d.push_back("2A");
      d.push_back("2B");
      continue;
    }
    d.push_back((i < 10 ? "0" : "") + std::to_string(i));
  }
  return d;
}();

}  // namespace

std::vector<std::string> template_rooms(DwellingType type, bool with_bedroom2) {
  std::vector<std::string> rooms;
  for (auto slot : kRoomSlots) {
    if (slot == "bedroom2" && !with_bedroom2) continue;
    if (slot == "bedroom3" && type == DwellingType::MatisseApartment) continue;
    rooms.emplace_back(slot);
  }
  return rooms;
}

std::string_view to_string(DwellingType v) { return kDwellingNames[static_cast<int>(v)]; }
std::string_view to_string(HeaterType v) { return kHeaterNames[static_cast<int>(v)]; }
std::string_view to_string(ControllerKind v) { return kControllerNames[static_cast<int>(v)]; }
std::string_view to_string(ComfortCategory v) { return kComfortNames[static_cast<int>(v)]; }
DwellingType parse_dwelling_type(std::string_view s) { return parse_enum<DwellingType>(s, kDwellingNames, "dwelling_type"); }
HeaterType parse_heater_type(std::string_view s) { return parse_enum<HeaterType>(s, kHeaterNames, "heater_type"); }
ControllerKind parse_controller_kind(std::string_view s) {
  return parse_enum<ControllerKind>(s, kControllerNames, "controller");
}
ComfortCategory parse_comfort_category(std::string_view s) {
  return parse_enum<ComfortCategory>(s, kComfortNames, "comfort_answer");
}

std::vector<std::string> SurveyRecord::rooms() const { return template_rooms(dwelling_type, has_bedroom2()); }

void validate(const SurveyRecord& r) {
  auto fail = [&](const std::string& msg) { throw ValidationError("dwelling " + r.dwelling_id + ": " + msg); };
  if (r.dwelling_id.empty()) fail("empty dwelling_id");
  if (!(r.floor_area > 0) || !std::isfinite(r.floor_area)) fail("floor_area must be > 0");
  if (r.n_rooms < 1) fail("n_rooms must be >= 1");
  if (std::find(kEras.begin(), kEras.end(), r.construction_era) == kEras.end()) {
    fail("unknown construction_era '" + r.construction_era + "'");
  }
  const auto rooms = r.rooms();
  if (static_cast<std::size_t>(r.n_rooms) != rooms.size()) {
    fail("n_rooms " + std::to_string(r.n_rooms) + " inconsistent with " + std::string(to_string(r.dwelling_type)) +
         " room list of " + std::to_string(rooms.size()));
  }
  auto check_keys = [&](const auto& map, const char* name) {
    if (map.size() != rooms.size()) fail(std::string(name) + " must cover exactly the template rooms");
    for (const auto& room : rooms) {
      if (!map.count(room)) fail(std::string(name) + " missing room " + room);
    }
  };
  check_keys(r.is_south, "is_south");
  check_keys(r.heater_power, "heater_power");
  check_keys(r.heater_type, "heater_type");
  check_keys(r.controller_type, "controller");
  check_keys(r.setpoint_profile, "setpoint");
  check_keys(r.presence_profile, "presence");
  check_keys(r.window_profile, "window");
  for (const auto& [room, p] : r.heater_power) {
    if (!(p >= 0) || !std::isfinite(p)) fail("heater_power of " + room + " must be >= 0");
  }
  if (!(r.aux_heater_power >= 0)) fail("aux_heater_power must be >= 0");
  if (!(r.gender_ratio >= 0 && r.gender_ratio <= 1)) fail("gender_ratio must lie in [0,1]");
  if (!(r.avg_age > 0)) fail("avg_age must be > 0");
  for (int h : r.aux_heater_hours) {
    if (h < 0 || h > 23) fail("aux_heater_hours out of range");
  }
  for (int h : r.wood_reload_hours) {
    if (h < 0 || h > 23) fail("wood_reload_hours out of range");
  }
}

const std::vector<std::string>& survey_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = kBaseColumns;
    for (auto room : kRoomSlots) {
      for (const auto& f : kRoomFields) c.push_back(room_column(f, room));
    }
    return c;
  }();
  return cols;
}

std::vector<SurveyRecord> parse_survey_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  const csv::Table table = csv::parse(in, source);
  const auto& cols = survey_columns();
  for (const auto& c : cols) {
    if (std::find(table.header.begin(), table.header.end(), c) == table.header.end()) {
      throw ParseError(source + ": schema mismatch, missing column '" + c + "'");
    }
  }
  for (const auto& h : table.header) {
    if (std::find(cols.begin(), cols.end(), h) == cols.end()) {
      throw ParseError(source + ": schema mismatch, unexpected column '" + h + "'");
    }
  }
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(table.column(c));

  std::vector<SurveyRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t row = 0; row < table.rows.size(); ++row) {
    const auto& fields = table.rows[row];
    std::size_t col = 0;
    auto cell = [&](std::size_t c) -> const std::string& {
      col = c;
      return fields[idx[c]];
    };
    try {
      SurveyRecord r;
      r.dwelling_id = cell(0);
      r.dwelling_type = parse_dwelling_type(cell(1));
      r.n_rooms = static_cast<int>(csv::parse_long(cell(2)));
      r.floor_area = csv::parse_double(cell(3));
      r.construction_era = cell(4);
      r.department = cell(5);
      if (!cell(6).empty()) r.heating_on = parse_month_day(cell(6));
      if (!cell(7).empty()) r.heating_off = parse_month_day(cell(7));
      r.aux_heater_power = csv::parse_double(cell(8));
      r.aux_heater_hours = parse_hours(cell(9));
      r.wood_reload_hours = parse_hours(cell(10));
      r.comfort_answer = parse_comfort_category(cell(11));
      r.avg_age = csv::parse_double(cell(12));
      r.gender_ratio = csv::parse_double(cell(13));
      std::size_t c = kBaseColumns.size();
      for (auto slot : kRoomSlots) {
        const std::string room(slot);
        const std::size_t base = c;
        c += kRoomFields.size();
        if (cell(base).empty()) {
          for (std::size_t k = base; k < c; ++k) {
            if (!cell(k).empty()) throw ParseError("value given for absent room " + room);
          }
          continue;
        }
        const auto& south = cell(base);
        if (south != "0" && south != "1") throw ParseError("is_south must be 0 or 1");
        r.is_south[room] = south == "1";
        r.heater_power[room] = csv::parse_double(cell(base + 1));
        r.heater_type[room] = parse_heater_type(cell(base + 2));
        r.controller_type[room] = parse_controller_kind(cell(base + 3));
        r.setpoint_profile[room] = parse_setpoint_week(cell(base + 4));
        r.presence_profile[room] = parse_bool_week(cell(base + 5));
        r.window_profile[room] = parse_bool_week(cell(base + 6));
      }
      out.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError(source + ": row " + std::to_string(row + 1) + " (line " +
                       std::to_string(table.first_data_line + row) + "), column '" + cols[col] + "': " + e.what());
    }
  }
  return out;
}

std::vector<SurveyRecord> parse_survey(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open survey file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_survey_text(ss.str(), path);
}

std::string serialize_survey(const std::vector<SurveyRecord>& records) {
  std::string out = csv::join_line(survey_columns()) + "\n";
  for (const auto& r : records) {
    std::vector<std::string> f = {r.dwelling_id,
                                  std::string(to_string(r.dwelling_type)),
                                  std::to_string(r.n_rooms),
                                  csv::format_double(r.floor_area),
                                  r.construction_era,
                                  r.department,
                                  r.heating_on ? format_month_day(*r.heating_on) : "",
                                  r.heating_off ? format_month_day(*r.heating_off) : "",
                                  csv::format_double(r.aux_heater_power),
                                  format_hours(r.aux_heater_hours),
                                  format_hours(r.wood_reload_hours),
                                  std::string(to_string(r.comfort_answer)),
                                  csv::format_double(r.avg_age),
                                  csv::format_double(r.gender_ratio)};
    for (auto slot : kRoomSlots) {
      const std::string room(slot);
      if (!r.is_south.count(room)) {
        for (std::size_t k = 0; k < kRoomFields.size(); ++k) f.emplace_back();
        continue;
      }
      f.push_back(r.is_south.at(room) ? "1" : "0");
      f.push_back(csv::format_double(r.heater_power.at(room)));
      f.emplace_back(to_string(r.heater_type.at(room)));
      f.emplace_back(to_string(r.controller_type.at(room)));
      f.push_back(format_setpoint_week(r.setpoint_profile.at(room)));
      f.push_back(format_bool_week(r.presence_profile.at(room)));
      f.push_back(format_bool_week(r.window_profile.at(room)));
    }
    out += csv::join_line(f) + "\n";
  }
  return out;
}

void write_survey(const std::string& path, const std::vector<SurveyRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << serialize_survey(records);
}

// ---------------------------------------------------------------------------
// Outlier filtering

namespace {
constexpr std::array<std::string_view, 7> kNumericFields = {
    "floor_area", "n_rooms", "avg_age", "gender_ratio", "aux_heater_power", "total_heater_power",
    "heater_power_density"};
}

bool is_numeric_field(std::string_view field) {
  return std::find(kNumericFields.begin(), kNumericFields.end(), field) != kNumericFields.end();
}

double numeric_field(const SurveyRecord& r, std::string_view field) {
  if (field == "floor_area") return r.floor_area;
  if (field == "n_rooms") return r.n_rooms;
  if (field == "avg_age") return r.avg_age;
  if (field == "gender_ratio") return r.gender_ratio;
  if (field == "aux_heater_power") return r.aux_heater_power;
  double total = 0;
  for (const auto& [_, p] : r.heater_power) total += p;
  if (field == "total_heater_power") return total;
  if (field == "heater_power_density") return total / r.floor_area;
  throw ValidationError("unknown numeric field '" + std::string(field) + "'");
}

double quantile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

IqrResult apply_bounds(const std::vector<SurveyRecord>& records, const std::vector<IqrBounds>& bounds) {
  IqrResult res;
  res.bounds = bounds;
  for (const auto& r : records) {
    bool rejected = false;
    for (const auto& b : bounds) {
      const double v = numeric_field(r, b.field);
      if (v < b.lower || v > b.upper) {
        res.rejected.push_back({r, b.field, v, b.lower, b.upper});
        rejected = true;
        break;
      }
    }
    if (!rejected) res.kept.push_back(r);
  }
  return res;
}

IqrResult iqr_filter(const std::vector<SurveyRecord>& records, const std::vector<std::string>& fields) {
  if (records.empty()) throw ValidationError("iqr_filter: empty record list");
  std::vector<IqrBounds> bounds;
  for (const auto& f : fields) {
    if (!is_numeric_field(f)) throw ValidationError("iqr_filter: unknown field '" + f + "'");
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(numeric_field(r, f));
    IqrBounds b;
    b.field = f;
    b.q1 = quantile_linear(v, 0.25);
    b.q3 = quantile_linear(v, 0.75);
    const double iqr = b.q3 - b.q1;
    b.lower = b.q1 - 1.5 * iqr;
    b.upper = b.q3 + 1.5 * iqr;
    bounds.push_back(b);
  }
  return apply_bounds(records, bounds);
}

std::string serialize_rejected(const std::vector<RejectedRecord>& rejected) {
  std::string out = "dwelling_id,field,value,lower,upper\n";
  for (const auto& r : rejected) {
    out += csv::join_line({r.record.dwelling_id, r.field, csv::format_double(r.value), csv::format_double(r.lower),
                           csv::format_double(r.upper)}) +
           "\n";
  }
  return out;
}

double map_comfort_category(ComfortCategory c, double occupied_span_s, const ComfortMapping& m) {
  switch (c) {
    case ComfortCategory::Comfortable: return 0;
    case ComfortCategory::ColdAtLeast24h: return m.cold_24h_hours * 3600;
    case ComfortCategory::ColdFewDays: return m.cold_few_days_hours * 3600;
    case ComfortCategory::ColdAlmostAlways: return m.almost_always_fraction * occupied_span_s;
    case ComfortCategory::ColdAlways: return m.always_fraction * occupied_span_s;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Synthetic surveys

const std::vector<std::string>& synth_departments() { return kDepartments; }

namespace {

struct Rng {
  std::mt19937_64 gen;
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen); }
  bool chance(double p) { return uniform(0, 1) < p; }
  template <typename T>
  const T& pick(const std::vector<T>& v) { return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))]; }
};

double round_to(double v, double q) { return std::round(v / q) * q; }

// Largest-remainder apportionment of n over the category weights.
std::vector<ComfortCategory> category_quota(std::size_t n) {
  std::array<std::size_t, 5> counts{};
  std::array<double, 5> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    const double exact = kComfortWeights[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    rem[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 5> order{0, 1, 2, 3, 4};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 5]];
  std::vector<ComfortCategory> out;
  for (std::size_t k = 0; k < 5; ++k) out.insert(out.end(), counts[k], kComfortCategories[k]);
  return out;
}

}  // namespace

std::vector<SurveyRecord> synth_survey(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("synth_survey: n must be >= 1");
  Rng rng{std::mt19937_64(seed)};
  auto categories = category_quota(n);
  std::shuffle(categories.begin(), categories.end(), rng.gen);

  std::vector<SurveyRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SurveyRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "D%05zu", i + 1);
    r.dwelling_id = id;
    r.dwelling_type = rng.chance(0.6) ? DwellingType::MozartHouse : DwellingType::MatisseApartment;
    const bool bed2 = rng.chance(0.6);
    const auto rooms = template_rooms(r.dwelling_type, bed2);
    r.n_rooms = static_cast<int>(rooms.size());
    const double ref = r.dwelling_type == DwellingType::MozartHouse ? (bed2 ? 85.0 : 74.0) : (bed2 ? 60.0 : 50.0);
    r.floor_area = round_to(std::clamp(ref * rng.uniform(0.8, 1.25), 20.0, 250.0), 0.5);
    r.construction_era = std::string(kEras[static_cast<std::size_t>(rng.integer(0, 5))]);
    r.department = rng.pick(kDepartments);

    const double main_pick = rng.uniform(0, 1);
    const HeaterType main = main_pick < 0.35   ? HeaterType::Convector
                            : main_pick < 0.55 ? HeaterType::RadiantPanel
                            : main_pick < 0.65 ? HeaterType::SoftHeat
                            : main_pick < 0.70 ? HeaterType::Accumulation
                            : main_pick < 0.94 ? HeaterType::Water
                                               : HeaterType::Wood;
    const bool worker = rng.chance(0.6);
    const double comfort_sp = round_to(rng.uniform(18.0, 22.0), 0.5);
    const double setback = rng.chance(0.3) ? 0.0 : round_to(rng.uniform(1.0, 4.0), 0.5);
    const bool pid_household = rng.chance(0.5);

    for (const auto& room : rooms) {
      r.is_south[room] = rng.chance(0.5);
      HeaterType type = main;
      if (main == HeaterType::Wood && room != "living") type = HeaterType::Convector;
      if (room == "bathroom" && main != HeaterType::Water) type = HeaterType::Convector;
      r.heater_type[room] = type;
      const double base_power = room == "living" ? 2000 : room == "bathroom" ? 750 : 1000;
      const bool no_heater = room != "living" && rng.chance(0.05);
      r.heater_power[room] = no_heater ? 0.0 : round_to(base_power * rng.uniform(0.7, 1.3), 250);
      if (no_heater || type == HeaterType::Wood) {
        r.controller_type[room] = ControllerKind::None;
      } else if (type == HeaterType::Water) {
        r.controller_type[room] = ControllerKind::PID;
      } else {
        r.controller_type[room] = pid_household ? ControllerKind::PID : ControllerKind::Deadband;
      }

      const bool used = room == "living" || room == "kitchen" || room == "bathroom" || room == "bedroom1" ||
                        rng.chance(0.6);
      TypicalWeek<bool> pres;
      for (int d = 0; d < 3; ++d) {
        const bool weekend = d > 0;
        for (int h = 0; h < 24; ++h) {
          bool p = false;
          const bool away = worker && !weekend && h >= 8 && h <= 16;
          if (room == "living") {
            p = !away && h >= (weekend ? 9 : 7) && h <= 22;
          } else if (room == "kitchen") {
            p = h == (weekend ? 8 : 7) || (h == 12 && !away) || h == 19;
          } else if (room == "bathroom") {
            p = h == (weekend ? 9 : 7) || h == 21;
          } else {
            p = used && (h >= 23 || h <= (weekend ? 8 : 6));
          }
          pres.days[d][h] = p;
        }
      }
      r.presence_profile[room] = pres;

      TypicalWeek<double> sp;
      for (int d = 0; d < 3; ++d) {
        for (int h = 0; h < 24; ++h) sp.days[d][h] = pres.days[d][h] ? comfort_sp : comfort_sp - setback;
      }
      r.setpoint_profile[room] = sp;

      TypicalWeek<bool> win;
      if (room.rfind("bedroom", 0) == 0 && used && rng.chance(0.5)) {
        const int hour = worker ? 7 : 9;
        for (int d = 0; d < 3; ++d) win.days[d][d == 0 ? hour : 10] = true;
      }
      r.window_profile[room] = win;
    }

    if (!rng.chance(0.2)) r.heating_on = MonthDay{rng.chance(0.5) ? 10u : 11u, static_cast<unsigned>(rng.integer(1, 10))};
    if (!rng.chance(0.2)) r.heating_off = MonthDay{4u, static_cast<unsigned>(rng.integer(1, 30))};
    if (rng.chance(0.2)) {
      r.aux_heater_power = round_to(rng.uniform(1000, 2000), 500);
      r.aux_heater_hours = {7, 19};
    }
    if (main == HeaterType::Wood) r.wood_reload_hours = {7, 12, 18};
    r.comfort_answer = categories[i];
    r.avg_age = round_to(rng.uniform(25, 80), 0.5);
    r.gender_ratio = round_to(rng.uniform(0, 1), 0.01);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace comfort
