#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "comfort/comfort_label.hpp"
#include "comfort/error.hpp"

using namespace comfort;

namespace {

constexpr double kStep = 1800;

std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> noise(0, 0.4);
  std::vector<double> v(n);
  double x = 19;
  for (auto& e : v) {
    x += noise(rng) + 0.05 * (19 - x);
    e = std::round(x * 10) / 10;
  }
  return v;
}

}  // namespace

TEST_CASE("presence_op_temp averages occupied rooms") {
  const std::vector<std::vector<double>> t = {{20, 21, 22, 23}, {18, 19, 20, 21}};
  const std::vector<std::vector<std::uint8_t>> p = {{1, 1, 0, 0}, {1, 0, 1, 0}};
  const auto s = presence_op_temp(t, p);
  REQUIRE(s.size() == 4);
  CHECK(s.value[0] == doctest::Approx(19));
  CHECK(s.value[1] == doctest::Approx(21));
  CHECK(s.value[2] == doctest::Approx(20));
  CHECK_FALSE(s.defined[3]);
  CHECK(std::isnan(s.value[3]));
  CHECK(s.compressed() == std::vector<double>{19, 21, 20});
  CHECK_THROWS_AS(presence_op_temp(t, {{1, 1, 0, 0}}), ValidationError);
}

TEST_CASE("epsilon0") {
  const std::vector<double> v = {20, 18, 17, 18, 20};
  CHECK(epsilon0(v, 2 * kStep) == 18);
  CHECK(epsilon0(v, 1 * kStep) == 17);
  CHECK(epsilon0(v, 0) == 17);
  CHECK(epsilon0(v, 5 * kStep) == 20);
  CHECK(epsilon0(std::vector<double>(10, 19.5), 4 * kStep) == 19.5);
  CHECK_THROWS_AS(epsilon0(v, 6 * kStep), InfeasibleError);
  CHECK(required_steps(2.5 * kStep, kStep) == 3);
  CHECK(required_steps(2 * kStep, kStep) == 2);
}

TEST_CASE("epsilon0 is minimal for random series") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_walk(rng, 120);
    const double t = (1 + trial % 10) * kStep;
    const std::size_t n = required_steps(t, kStep);
    const double e0 = epsilon0(v, t);
    auto longest = [&](double thr) {
      std::size_t best = 0, run = 0;
      for (double x : v) best = std::max(best, run = x <= thr ? run + 1 : 0);
      return best;
    };
    CHECK(longest(e0) >= n);
    for (double x : v) {
      if (x < e0) CHECK(longest(x) < n);
    }
  }
}

TEST_CASE("local minima and candidate pairs") {
  const std::vector<double> vee = {20, 15, 10, 15, 20};
  const auto c = candidate_pairs(vee, 12, 2 * kStep);
  REQUIRE(c.size() == 1);
  CHECK(c[0].eps_min == 10);
  CHECK(c[0].eps_max == 20);

  const std::vector<double> plateau = {20, 17, 17, 17, 19, 16, 18};
  CHECK(local_minima(plateau, 100) == std::vector<std::size_t>{1, 5});
  CHECK(local_minima(plateau, 16.5) == std::vector<std::size_t>{5});

  // A monotone rise has one minimum at its start.
  const std::vector<double> rising = {15, 16, 17, 18};
  const auto r = candidate_pairs(rising, 15, 1 * kStep);
  REQUIRE(r.size() == 1);
  CHECK(r[0].eps_min == 15);
  CHECK(r[0].eps_max == 16);
  // Nothing below eps0.
  CHECK(candidate_pairs(rising, 14, kStep).empty());
  // A constant series has no ordered pair.
  CHECK(candidate_pairs(std::vector<double>(8, 18), 18, kStep).empty());
}

TEST_CASE("hysteresis state machine") {
  const std::vector<double> v = {20, 18, 17, 18.5, 19, 20, 21, 17, 20};
  const auto l = apply_hysteresis(v, {17, 20});
  const std::vector<Label> expected = {Label::Comfort,     Label::Comfort,     Label::Discomfort,
                                       Label::Discomfort,  Label::Discomfort,  Label::Comfort,
                                       Label::Comfort,     Label::Discomfort,  Label::Comfort};
  CHECK(l.labels == expected);
  CHECK(l.n_switch == 4);
  REQUIRE(l.episodes.size() == 2);
  CHECK(l.episodes[0] == 3 * kStep);
  CHECK(l.max_episode() == 3 * kStep);

  // Undefined steps emit Unknown and keep the state.
  PresenceSeries s{{16, NAN, NAN, 21}, {1, 0, 0, 1}};
  const auto u = apply_hysteresis(s, {17, 20});
  CHECK(u.labels == std::vector<Label>{Label::Discomfort, Label::Unknown, Label::Unknown, Label::Comfort});

  const auto single = single_threshold(v, 18);
  CHECK(single.n_switch == 4);
}

TEST_CASE("select_pair prefers fewer switches, then lower thresholds") {
  const std::vector<double> v = {20, 17, 18, 17, 18, 17, 20, 21, 20};
  const double t = 5 * kStep;
  const double e0 = epsilon0(v, t);
  CHECK(e0 == 18);
  const auto sel = select_pair(candidate_pairs(v, e0, t), v, t, e0);
  CHECK_FALSE(sel.report.fallback);
  CHECK(sel.report.ordered);
  CHECK(sel.report.duration_satisfied);
  CHECK(sel.labels.n_switch == 2);
  CHECK(sel.pair.eps_min == 17);
  CHECK(sel.pair.eps_max == 20);
  CHECK(sel.report.n_switch_single == 2);
}

TEST_CASE("select_pair falls back when no pair is feasible") {
  const std::vector<double> flat(6, 19);
  const auto sel = select_pair({}, flat, 2 * kStep, 19);
  CHECK(sel.report.fallback);
  CHECK_FALSE(sel.report.ordered);
  CHECK(sel.labels.labels == std::vector<Label>(6, Label::Discomfort));
  CHECK_THROWS_AS(brute_force_thresholds(flat, 2 * kStep), InfeasibleError);
}

TEST_CASE("label_series agrees with exhaustive search on random series") {
  std::mt19937_64 rng(11);
  int optimal = 0, total = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto v = random_walk(rng, 40 + trial * 2);
    const double t = (2 + trial % 8) * kStep;
    PresenceSeries s{v, std::vector<std::uint8_t>(v.size(), 1)};
    const auto sel = label_series(s, t);
    BruteForceResult bf;
    try {
      bf = brute_force_thresholds(v, t);
    } catch (const InfeasibleError&) {
      CHECK(sel.report.fallback);
      continue;
    }
    ++total;
    REQUIRE_FALSE(sel.report.fallback);
    CHECK(sel.report.ordered);
    CHECK(sel.report.duration_satisfied);
    CHECK(sel.labels.n_switch >= bf.n_switch);
    if (sel.labels.n_switch == bf.n_switch) ++optimal;
    // The chosen pair never switches more often than the single threshold.
    CHECK(sel.labels.n_switch <= sel.report.n_switch_single);
  }
  REQUIRE(total > 30);
  CHECK(optimal >= 0.9 * total);
}

TEST_CASE("label_series re-expands to the full grid") {
  PresenceSeries s{{18, NAN, 15, 15, NAN, 15, 19, 21}, {1, 0, 1, 1, 0, 1, 1, 1}};
  const auto sel = label_series(s, 3 * kStep);
  REQUIRE(sel.labels.labels.size() == 8);
  CHECK(sel.labels.labels[1] == Label::Unknown);
  CHECK(sel.labels.labels[4] == Label::Unknown);
  CHECK(sel.labels.labels[2] == Label::Discomfort);
  CHECK(sel.labels.labels[5] == Label::Discomfort);
  CHECK(sel.labels.labels[7] == Label::Comfort);

  PresenceSeries empty{std::vector<double>(4, NAN), std::vector<std::uint8_t>(4, 0)};
  const auto none = label_series(empty, kStep);
  CHECK(none.labels.labels == std::vector<Label>(4, Label::Unknown));
  CHECK(none.report.fallback);
}

TEST_CASE("label and report files round trip") {
  const TimeGrid grid{from_civil({2022, 10, 1}), kOutputStep, 6};
  PresenceSeries s{{18, NAN, 15.25, 15, 17, 19}, {1, 0, 1, 1, 1, 1}};
  const auto sel = label_series(s, 2 * kStep);
  const auto text = serialize_labels(grid, s, sel.labels);
  const auto back = parse_labels(text);
  CHECK(back.grid == grid);
  CHECK(back.labels == sel.labels.labels);
  CHECK(back.series.defined == s.defined);
  CHECK(back.series.value[2] == 15.25);
  CHECK(serialize_report("D0001", sel.report).find("\"eps0\"") != std::string::npos);
  CHECK_THROWS_AS(parse_labels("timestamp,label,t_op_pres\n2022-10-01T00:00:00,warm,1\n"), ParseError);
}
