#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comfort/calendar.hpp"

namespace comfort {

enum class Label : std::uint8_t { Comfort = 0, Discomfort = 1, Unknown = 2 };
std::string_view to_string(Label l);
Label parse_label(std::string_view s);

/// Presence-weighted operative temperature; undefined where nobody is home.
struct PresenceSeries {
  std::vector<double> value;  // NaN where undefined
  std::vector<std::uint8_t> defined;

  std::size_t size() const { return value.size(); }
  /// Defined values in time order.
  std::vector<double> compressed() const;
};

PresenceSeries presence_op_temp(const std::vector<std::vector<double>>& t_op,
                                const std::vector<std::vector<std::uint8_t>>& presence);

struct ThresholdPair {
  double eps_min = 0;
  double eps_max = 0;
  int candidate_index = -1;
};

struct LabelSeries {
  std::vector<Label> labels;
  int n_switch = 0;
  std::vector<double> episodes;  // seconds, one per maximal Discomfort run
  double dt_step = kOutputStep;

  double max_episode() const;
};

/// Hysteresis state machine started in Comfort: enter Discomfort at or below
/// eps_min, leave at or above eps_max. Undefined steps emit Unknown and keep
/// the state.
LabelSeries apply_hysteresis(const PresenceSeries& series, const ThresholdPair& pair, double dt_step = kOutputStep);
LabelSeries apply_hysteresis(const std::vector<double>& values, const ThresholdPair& pair,
                             double dt_step = kOutputStep);

/// Labels Discomfort exactly where the value is <= eps0.
LabelSeries single_threshold(const std::vector<double>& values, double eps0, double dt_step = kOutputStep);

/// Number of steps a duration requires: ceil(t / dt).
std::size_t required_steps(double t_discomfort, double dt_step);

/// Smallest observed value v such that some run of consecutive values <= v
/// lasts at least t_discomfort. Throws InfeasibleError when even the whole
/// series is too short.
double epsilon0(const std::vector<double>& values, double t_discomfort, double dt_step = kOutputStep);

/// Local minima (plateaus reported at their first index) with value <= bound.
std::vector<std::size_t> local_minima(const std::vector<double>& values, double bound);

/// Pairs seeded at each local minimum below eps0; eps_max is the largest value
/// over the following required_steps window. Pairs with eps_max <= eps_min are
/// dropped.
std::vector<ThresholdPair> candidate_pairs(const std::vector<double>& values, double eps0, double t_discomfort,
                                           double dt_step = kOutputStep);

struct OptimizationReport {
  double eps0 = 0;
  double t_discomfort = 0;
  std::vector<ThresholdPair> candidates;
  ThresholdPair chosen;
  int n_switch = 0;
  int n_switch_single = 0;  // single threshold eps0
  double max_episode = 0;
  bool ordered = false;             // eps_max > eps_min
  bool duration_satisfied = false;  // longest episode >= t_discomfort
  bool fallback = false;
  std::string note;
};

struct Selection {
  ThresholdPair pair;
  LabelSeries labels;  // on the compressed series
  OptimizationReport report;
};

/// Evaluates the given candidates plus, for each distinct eps_min among them,
/// the smallest observed eps_max reaching the lowest switch count attainable
/// with that eps_min. Picks the feasible pair minimizing
/// (n_switch, eps_max, eps_min). Falls back to the single eps0 threshold when
/// nothing is feasible.
Selection select_pair(const std::vector<ThresholdPair>& candidates, const std::vector<double>& values,
                      double t_discomfort, double eps0, double dt_step = kOutputStep);

/// Full labeling of one dwelling: eps0, candidates, selection, and labels
/// re-expanded to the full grid (Unknown where nobody is home).
Selection label_series(const PresenceSeries& series, double t_discomfort, double dt_step = kOutputStep);

struct BruteForceResult {
  ThresholdPair pair;
  int n_switch = 0;
  double max_episode = 0;
};

/// Exhaustive search over all ordered pairs of observed values. Throws
/// InfeasibleError when no pair satisfies both constraints.
BruteForceResult brute_force_thresholds(const std::vector<double>& values, double t_discomfort,
                                        double dt_step = kOutputStep);

std::string serialize_labels(const TimeGrid& grid, const PresenceSeries& series, const LabelSeries& labels);
std::string serialize_report(const std::string& dwelling_id, const OptimizationReport& report);

struct LabelFile {
  TimeGrid grid;
  std::vector<Label> labels;
  PresenceSeries series;
};
LabelFile parse_labels(const std::string& text, const std::string& source = "<memory>");
LabelFile read_labels(const std::string& path);

}  // namespace comfort
