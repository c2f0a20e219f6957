#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "comfort/csv.hpp"
#include "comfort/error.hpp"
#include "comfort/survey.hpp"
#include "fixtures.hpp"

using namespace comfort;

namespace {

std::string header_line() {
  std::vector<std::string> cols = survey_columns();
  return csv::join_line(cols) + "\n";
}

std::vector<SurveyRecord> with_floor_areas(const std::vector<double>& areas) {
  auto recs = synth_survey(areas.size(), 5);
  for (std::size_t i = 0; i < areas.size(); ++i) recs[i].floor_area = areas[i];
  return recs;
}

}  // namespace

TEST_CASE("parse_survey: header only gives no records") {
  CHECK(parse_survey_text(header_line()).empty());
}

TEST_CASE("parse_survey: unparseable floor area names row and column") {
  const auto text = serialize_survey(synth_survey(2, 3));
  auto table_lines = std::vector<std::string>{};
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) table_lines.push_back(l);
  REQUIRE(table_lines.size() == 3);
  auto fields = csv::split_line(table_lines[2]);
  const auto& cols = survey_columns();
  const auto idx = static_cast<std::size_t>(std::find(cols.begin(), cols.end(), "floor_area") - cols.begin());
  fields[idx] = "abc";
  const std::string bad = table_lines[0] + "\n" + table_lines[1] + "\n" + csv::join_line(fields) + "\n";
  try {
    parse_survey_text(bad, "fixture.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("floor_area") != std::string::npos);
  }
}

TEST_CASE("parse_survey: schema mismatch names the column") {
  std::string text = header_line();
  text.replace(text.find("floor_area"), 10, "floor_size");
  try {
    parse_survey_text(text);
    FAIL("expected a schema error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("floor_area") != std::string::npos);
  }
}

TEST_CASE("parse_survey: unknown enum literal is rejected") {
  auto text = serialize_survey(synth_survey(1, 3));
  const auto pos = text.find(",mozart,") != std::string::npos ? text.find(",mozart,") + 1
                                                                    : text.find(",matisse,") + 1;
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 5, "villa");
  CHECK_THROWS_AS(parse_survey_text(text), ParseError);
}

TEST_CASE("parse_survey: ten-row fixture matches field by field") {
  const auto recs = parse_survey(TEST_DATA_DIR "/survey10.csv");
  const auto expected = synth_survey(10, 42);
  REQUIRE(recs.size() == 10);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CAPTURE(i);
    CHECK(recs[i].dwelling_id == expected[i].dwelling_id);
    CHECK(recs[i].dwelling_type == expected[i].dwelling_type);
    CHECK(recs[i].floor_area == expected[i].floor_area);
    CHECK(recs[i].is_south == expected[i].is_south);
    CHECK(recs[i].heater_power == expected[i].heater_power);
    CHECK(recs[i].setpoint_profile == expected[i].setpoint_profile);
    CHECK(recs[i].presence_profile == expected[i].presence_profile);
    CHECK(recs[i].comfort_answer == expected[i].comfort_answer);
    CHECK(recs[i] == expected[i]);
  }
}

TEST_CASE("survey round trip is the identity") {
  const auto recs = synth_survey(25, 11);
  CHECK(parse_survey_text(serialize_survey(recs)) == recs);
}

TEST_CASE("iqr_filter: identical values reject nothing") {
  const auto res = iqr_filter(with_floor_areas(std::vector<double>(12, 80.0)), {"floor_area"});
  CHECK(res.rejected.empty());
  CHECK(res.kept.size() == 12);
}

TEST_CASE("iqr_filter: 1..9 plus 1000 rejects the outlier") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 1000};
  // Linear interpolation at h = (n-1)p: Q1 = 3.25, Q3 = 7.75.
  CHECK(quantile_linear(v, 0.25) == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(quantile_linear(v, 0.75) == doctest::Approx(7.75).epsilon(1e-12));
  const auto res = iqr_filter(with_floor_areas(v), {"floor_area"});
  REQUIRE(res.rejected.size() == 1);
  CHECK(res.rejected[0].record.floor_area == 1000);
  CHECK(res.rejected[0].field == "floor_area");
  CHECK(res.bounds[0].upper == doctest::Approx(7.75 + 1.5 * 4.5));
  CHECK(res.kept.size() == 9);
}

TEST_CASE("iqr_filter: partition, bounds and idempotence") {
  auto recs = synth_survey(60, 9);
  recs[3].floor_area = 900;
  recs[7].avg_age = 140;
  const std::vector<std::string> fields{"floor_area", "avg_age"};
  const auto res = iqr_filter(recs, fields);
  CHECK(res.kept.size() + res.rejected.size() == recs.size());
  std::set<std::string> ids;
  for (const auto& r : res.kept) ids.insert(r.dwelling_id);
  for (const auto& r : res.rejected) CHECK(ids.insert(r.record.dwelling_id).second);
  for (const auto& r : res.kept) {
    for (const auto& b : res.bounds) {
      CHECK(numeric_field(r, b.field) >= b.lower);
      CHECK(numeric_field(r, b.field) <= b.upper);
    }
  }
  const auto again = apply_bounds(res.kept, res.bounds);
  CHECK(again.kept == res.kept);
  CHECK(again.rejected.empty());
}

TEST_CASE("iqr_filter: errors") {
  CHECK_THROWS_AS(iqr_filter({}, {"floor_area"}), ValidationError);
  CHECK_THROWS_AS(iqr_filter(synth_survey(3, 1), {"shoe_size"}), ValidationError);
}

TEST_CASE("map_comfort_category: defaults and monotonicity") {
  const double span = 3000.0 * 3600;
  CHECK(map_comfort_category(ComfortCategory::Comfortable, span) == 0);
  CHECK(map_comfort_category(ComfortCategory::ColdAtLeast24h, span) == 24 * 3600.0);
  CHECK(map_comfort_category(ComfortCategory::ColdFewDays, span) == 72 * 3600.0);
  double prev = -1;
  for (auto c : kComfortCategories) {
    const double v = map_comfort_category(c, span);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("synth_survey: deterministic for a seed") {
  CHECK(serialize_survey(synth_survey(5, 7)) == serialize_survey(synth_survey(5, 7)));
  CHECK(serialize_survey(synth_survey(5, 7)) != serialize_survey(synth_survey(5, 8)));
}

TEST_CASE("synth_survey: 100 valid records populating every category") {
  const auto recs = synth_survey(100, 1);
  REQUIRE(recs.size() == 100);
  std::map<ComfortCategory, int> counts;
  for (const auto& r : recs) {
    CHECK_NOTHROW(validate(r));
    ++counts[r.comfort_answer];
  }
  CHECK(counts.size() == 5);
  // Chi-square against the fixed weights, 4 degrees of freedom, 0.1% level.
  double chi2 = 0;
  for (std::size_t k = 0; k < kComfortCategories.size(); ++k) {
    const double expected = 100 * kComfortWeights[k];
    const double d = counts[kComfortCategories[k]] - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 < 18.47);
}

TEST_CASE("validate: rejects broken records") {
  auto r = synth_survey(1, 2)[0];
  r.floor_area = 0;
  CHECK_THROWS_AS(validate(r), ValidationError);
  r = synth_survey(1, 2)[0];
  r.heater_power.begin()->second = -5;
  CHECK_THROWS_AS(validate(r), ValidationError);
  r = synth_survey(1, 2)[0];
  r.n_rooms += 7;
  CHECK_THROWS_AS(validate(r), ValidationError);
}
