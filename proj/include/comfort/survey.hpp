#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comfort/calendar.hpp"

namespace comfort {

enum class DwellingType { MozartHouse, MatisseApartment };
enum class HeaterType { Convector, RadiantPanel, SoftHeat, Accumulation, Water, Wood };
enum class ControllerKind { PID, Deadband, None };
enum class ComfortCategory { Comfortable, ColdAtLeast24h, ColdFewDays, ColdAlmostAlways, ColdAlways };

inline constexpr std::array<ComfortCategory, 5> kComfortCategories = {
    ComfortCategory::Comfortable, ComfortCategory::ColdAtLeast24h, ComfortCategory::ColdFewDays,
    ComfortCategory::ColdAlmostAlways, ComfortCategory::ColdAlways};

/// Construction-era bands, oldest first.
inline constexpr std::array<std::string_view, 6> kEras = {"pre1948",   "1948-1974", "1975-1988",
                                                           "1989-2000", "2001-2012", "post2012"};

/// Canonical room slots across both templates, in CSV column order.
inline constexpr std::array<std::string_view, 6> kRoomSlots = {"living",   "kitchen",  "bedroom1",
                                                                "bedroom2", "bedroom3", "bathroom"};

/// Rooms of a dwelling type; bedroom2 is the optional room of both templates.
std::vector<std::string> template_rooms(DwellingType type, bool with_bedroom2);

std::string_view to_string(DwellingType v);
std::string_view to_string(HeaterType v);
std::string_view to_string(ControllerKind v);
std::string_view to_string(ComfortCategory v);
DwellingType parse_dwelling_type(std::string_view s);
HeaterType parse_heater_type(std::string_view s);
ControllerKind parse_controller_kind(std::string_view s);
ComfortCategory parse_comfort_category(std::string_view s);

/// Hourly profile over three typical days: weekday (Mon-Fri), Saturday, Sunday.
template <typename T>
struct TypicalWeek {
  std::array<std::array<T, 24>, 3> days{};

  static constexpr int day_index(int weekday) { return weekday < 5 ? 0 : weekday - 4; }
  /// weekday 0 = Monday.
  const T& at(int weekday, int hour) const { return days[day_index(weekday)][hour]; }
  friend bool operator==(const TypicalWeek&, const TypicalWeek&) = default;
};

struct SurveyRecord {
  std::string dwelling_id;
  DwellingType dwelling_type = DwellingType::MozartHouse;
  int n_rooms = 0;
  double floor_area = 0;
  std::string construction_era;
  std::string department;
  std::map<std::string, bool> is_south;
  std::map<std::string, double> heater_power;
  std::map<std::string, HeaterType> heater_type;
  std::map<std::string, ControllerKind> controller_type;
  std::map<std::string, TypicalWeek<double>> setpoint_profile;
  std::map<std::string, TypicalWeek<bool>> presence_profile;
  std::map<std::string, TypicalWeek<bool>> window_profile;
  std::optional<MonthDay> heating_on;
  std::optional<MonthDay> heating_off;
  double aux_heater_power = 0;
  std::vector<int> aux_heater_hours;
  std::vector<int> wood_reload_hours;
  ComfortCategory comfort_answer = ComfortCategory::Comfortable;
  double avg_age = 0;
  double gender_ratio = 0;  // female fraction

  /// Room names present in this record, in template order.
  std::vector<std::string> rooms() const;
  bool has_bedroom2() const { return is_south.count("bedroom2") != 0; }

  friend bool operator==(const SurveyRecord&, const SurveyRecord&) = default;
};

/// Throws ValidationError listing the first violated invariant.
void validate(const SurveyRecord& r);

/// Column dictionary of the survey CSV, in order.
const std::vector<std::string>& survey_columns();

std::vector<SurveyRecord> parse_survey(const std::string& path);
std::vector<SurveyRecord> parse_survey_text(const std::string& text, const std::string& source = "<memory>");
std::string serialize_survey(const std::vector<SurveyRecord>& records);
void write_survey(const std::string& path, const std::vector<SurveyRecord>& records);

/// Numeric fields addressable by name for outlier filtering.
double numeric_field(const SurveyRecord& r, std::string_view field);
bool is_numeric_field(std::string_view field);

struct IqrBounds {
  std::string field;
  double q1 = 0, q3 = 0, lower = 0, upper = 0;
};

struct RejectedRecord {
  SurveyRecord record;
  std::string field;  // first offending field
  double value = 0;
  double lower = 0, upper = 0;
};

struct IqrResult {
  std::vector<SurveyRecord> kept;
  std::vector<RejectedRecord> rejected;
  std::vector<IqrBounds> bounds;
};

/// Quantile with linear interpolation between order statistics at h = (n-1)p.
double quantile_linear(std::vector<double> values, double p);

IqrResult iqr_filter(const std::vector<SurveyRecord>& records, const std::vector<std::string>& fields);
/// Same partition rule with bounds fixed in advance (e.g. from a previous pass).
IqrResult apply_bounds(const std::vector<SurveyRecord>& records, const std::vector<IqrBounds>& bounds);
std::string serialize_rejected(const std::vector<RejectedRecord>& rejected);

/// Category -> required discomfort duration. The last two categories are
/// fractions of the dwelling's occupied span.
struct ComfortMapping {
  double cold_24h_hours = 24;
  double cold_few_days_hours = 72;
  double almost_always_fraction = 0.6;
  double always_fraction = 0.9;
};

/// Required discomfort duration in seconds; occupied_span_s is the total
/// occupied time the fractional categories refer to.
double map_comfort_category(ComfortCategory c, double occupied_span_s, const ComfortMapping& m = {});

/// Weights of the five answers in the surveyed population.
inline constexpr std::array<double, 5> kComfortWeights = {0.846, 0.069, 0.052, 0.019, 0.014};

std::vector<SurveyRecord> synth_survey(std::size_t n, std::uint64_t seed);

/// Unique climate-zone departments shipped with the generator.
const std::vector<std::string>& synth_departments();

}  // namespace comfort
