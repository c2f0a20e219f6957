#include "comfort/comfort_label.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "comfort/csv.hpp"
#include "comfort/error.hpp"

namespace comfort {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Eval {
  int n_switch = 0;
  std::size_t max_run = 0;
};

// Switch count and longest Discomfort run (in steps) of the hysteresis rule.
Eval evaluate(const std::vector<double>& v, double lo, double hi) {
  Eval e;
  bool disc = false;
  std::size_t run = 0;
  for (double x : v) {
    if (!disc) {
      if (x <= lo) disc = true, ++e.n_switch;
    } else if (x >= hi) {
      disc = false, ++e.n_switch;
    }
    if (disc) {
      e.max_run = std::max(e.max_run, ++run);
    } else {
      run = 0;
    }
  }
  return e;
}

std::size_t longest_run_le(const std::vector<double>& v, double threshold) {
  std::size_t best = 0, run = 0;
  for (double x : v) {
    run = x <= threshold ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void finish_episodes(LabelSeries& out) {
  std::size_t run = 0;
  for (Label l : out.labels) {
    if (l == Label::Discomfort) {
      ++run;
    } else if (l == Label::Comfort && run) {
      out.episodes.push_back(static_cast<double>(run) * out.dt_step);
      run = 0;
    }
  }
  if (run) out.episodes.push_back(static_cast<double>(run) * out.dt_step);
}

}  // namespace

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Comfort: return "comfort";
    case Label::Discomfort: return "discomfort";
    case Label::Unknown: return "unknown";
  }
  return "?";
}

Label parse_label(std::string_view s) {
  if (s == "comfort") return Label::Comfort;
  if (s == "discomfort") return Label::Discomfort;
  if (s == "unknown") return Label::Unknown;
  throw ParseError("unknown label '" + std::string(s) + "'");
}

std::vector<double> PresenceSeries::compressed() const {
  std::vector<double> out;
  for (std::size_t k = 0; k < size(); ++k) {
    if (defined[k]) out.push_back(value[k]);
  }
  return out;
}

PresenceSeries presence_op_temp(const std::vector<std::vector<double>>& t_op,
                                const std::vector<std::vector<std::uint8_t>>& presence) {
  if (t_op.size() != presence.size()) throw ValidationError("presence_op_temp: room count mismatch");
  const std::size_t n = t_op.empty() ? 0 : t_op[0].size();
  for (std::size_t r = 0; r < t_op.size(); ++r) {
    if (t_op[r].size() != n || presence[r].size() != n) throw ValidationError("presence_op_temp: length mismatch");
  }
  PresenceSeries s;
  s.value.assign(n, kNaN);
  s.defined.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    double num = 0;
    int count = 0;
    for (std::size_t r = 0; r < t_op.size(); ++r) {
      if (presence[r][k]) num += t_op[r][k], ++count;
    }
    if (count > 0) {
      s.value[k] = num / count;
      s.defined[k] = 1;
    }
  }
  return s;
}

double LabelSeries::max_episode() const {
  return episodes.empty() ? 0.0 : *std::max_element(episodes.begin(), episodes.end());
}

LabelSeries apply_hysteresis(const PresenceSeries& series, const ThresholdPair& pair, double dt_step) {
  LabelSeries out;
  out.dt_step = dt_step;
  out.labels.resize(series.size());
  bool disc = false;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (!series.defined[k]) {
      out.labels[k] = Label::Unknown;
      continue;
    }
    const double x = series.value[k];
    if (!disc && x <= pair.eps_min) {
      disc = true, ++out.n_switch;
    } else if (disc && x >= pair.eps_max) {
      disc = false, ++out.n_switch;
    }
    out.labels[k] = disc ? Label::Discomfort : Label::Comfort;
  }
  finish_episodes(out);
  return out;
}

LabelSeries apply_hysteresis(const std::vector<double>& values, const ThresholdPair& pair, double dt_step) {
  PresenceSeries s{values, std::vector<std::uint8_t>(values.size(), 1)};
  return apply_hysteresis(s, pair, dt_step);
}

LabelSeries single_threshold(const std::vector<double>& values, double eps0, double dt_step) {
  LabelSeries out;
  out.dt_step = dt_step;
  bool disc = false;
  for (double x : values) {
    const bool now = x <= eps0;
    if (now != disc) ++out.n_switch;
    disc = now;
    out.labels.push_back(disc ? Label::Discomfort : Label::Comfort);
  }
  finish_episodes(out);
  return out;
}

std::size_t required_steps(double t_discomfort, double dt_step) {
  if (!(t_discomfort >= 0) || !(dt_step > 0)) throw ValidationError("durations must be >= 0 and the step > 0");
  return static_cast<std::size_t>(std::ceil(t_discomfort / dt_step - 1e-9));
}

double epsilon0(const std::vector<double>& values, double t_discomfort, double dt_step) {
  if (values.empty()) throw ValidationError("epsilon0: series has no defined value");
  const std::size_t n = required_steps(t_discomfort, dt_step);
  const auto vals = sorted_unique(values);
  if (n == 0) return vals.front();
  if (n > values.size()) {
    throw InfeasibleError("epsilon0: required discomfort of " + std::to_string(n) + " steps exceeds the " +
                          std::to_string(values.size()) + " defined steps");
  }
  // The longest run below a threshold grows with the threshold.
  std::size_t lo = 0, hi = vals.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (longest_run_le(values, vals[mid]) >= n) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return vals[lo];
}

std::vector<std::size_t> local_minima(const std::vector<double>& v, double bound) {
  std::vector<std::size_t> out;
  std::size_t i = 0;
  const std::size_t n = v.size();
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[j + 1] == v[i]) ++j;
    const bool left = i == 0 || v[i - 1] > v[i];
    const bool right = j == n - 1 || v[j + 1] > v[i];
    if (left && right && v[i] <= bound) out.push_back(i);
    i = j + 1;
  }
  return out;
}

std::vector<ThresholdPair> candidate_pairs(const std::vector<double>& values, double eps0, double t_discomfort,
                                           double dt_step) {
  const std::size_t n_clu = required_steps(t_discomfort, dt_step);
  std::vector<ThresholdPair> out;
  for (std::size_t m : local_minima(values, eps0)) {
    const std::size_t end = std::min(m + n_clu, values.size() - 1);
    const double hi = *std::max_element(values.begin() + static_cast<std::ptrdiff_t>(m),
                                        values.begin() + static_cast<std::ptrdiff_t>(end) + 1);
    if (hi > values[m]) out.push_back({values[m], hi, static_cast<int>(out.size())});
  }
  return out;
}

Selection select_pair(const std::vector<ThresholdPair>& candidates, const std::vector<double>& values,
                      double t_discomfort, double eps0, double dt_step) {
  if (values.empty()) throw ValidationError("select_pair: series has no defined value");
  const std::size_t n = required_steps(t_discomfort, dt_step);
  const auto vals = sorted_unique(values);
  Selection sel;
  auto& rep = sel.report;
  rep.eps0 = eps0;
  rep.t_discomfort = t_discomfort;
  rep.candidates = candidates;

  using Key = std::tuple<int, double, double>;
  bool have = false;
  Key best{};
  auto consider = [&](const ThresholdPair& p, const Eval& e) {
    if (!(p.eps_max > p.eps_min) || e.max_run < n) return;
    const Key k{e.n_switch, p.eps_max, p.eps_min};
    if (!have || k < best) {
      have = true, best = k;
      sel.pair = p;
    }
  };
  for (const auto& c : candidates) consider(c, evaluate(values, c.eps_min, c.eps_max));

  std::vector<double> mins;
  for (const auto& c : candidates) mins.push_back(c.eps_min);
  mins = sorted_unique(mins);
  for (double a : mins) {
    const auto first = std::upper_bound(vals.begin(), vals.end(), a);
    if (first == vals.end()) continue;
    const std::size_t lo0 = static_cast<std::size_t>(first - vals.begin());
    std::size_t hi = vals.size() - 1;
    const Eval top = evaluate(values, a, vals[hi]);
    if (top.max_run < n) continue;
    if (have && top.n_switch > std::get<0>(best)) continue;
    const int target = top.n_switch;
    if (have && target == std::get<0>(best)) {
      // Only an eps_max at or below the incumbent can improve the key.
      const auto it = std::upper_bound(vals.begin(), vals.end(), std::get<1>(best));
      if (it == vals.begin()) continue;
      const auto cap = static_cast<std::size_t>(it - vals.begin()) - 1;
      if (cap < lo0) continue;
      hi = std::min(hi, cap);
      const Eval e = evaluate(values, a, vals[hi]);
      if (e.max_run < n || e.n_switch > target) continue;
    }
    // Switches fall and the longest episode grows as eps_max rises.
    std::size_t lo = lo0;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      const Eval e = evaluate(values, a, vals[mid]);
      if (e.max_run >= n && e.n_switch <= target) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    const ThresholdPair p{a, vals[lo], static_cast<int>(rep.candidates.size())};
    const Eval e = evaluate(values, p.eps_min, p.eps_max);
    const std::size_t before = rep.candidates.size();
    rep.candidates.push_back(p);
    consider(p, e);
    if (sel.pair.candidate_index != p.candidate_index) rep.candidates.resize(before);
  }

  rep.n_switch_single = single_threshold(values, eps0, dt_step).n_switch;
  if (have) {
    sel.labels = apply_hysteresis(values, sel.pair, dt_step);
  } else {
    rep.fallback = true;
    rep.note = "no candidate satisfies both constraints; single threshold eps0 used";
    sel.pair = {eps0, eps0, -1};
    sel.labels = single_threshold(values, eps0, dt_step);
  }
  rep.chosen = sel.pair;
  rep.n_switch = sel.labels.n_switch;
  rep.max_episode = sel.labels.max_episode();
  rep.ordered = sel.pair.eps_max > sel.pair.eps_min;
  rep.duration_satisfied = rep.max_episode >= t_discomfort - 1e-9 * std::max(1.0, t_discomfort);
  return sel;
}

Selection label_series(const PresenceSeries& series, double t_discomfort, double dt_step) {
  const auto values = series.compressed();
  Selection sel;
  if (values.empty()) {
    sel.report.fallback = true;
    sel.report.t_discomfort = t_discomfort;
    sel.report.note = "dwelling never occupied; every step is unknown";
    sel.labels.dt_step = dt_step;
    sel.labels.labels.assign(series.size(), Label::Unknown);
    return sel;
  }
  const std::size_t n = required_steps(t_discomfort, dt_step);
  if (n == 0) {
    const double lo = *std::min_element(values.begin(), values.end());
    sel.pair = {lo - 1.0, lo, 0};
    sel.report.eps0 = lo;
    sel.report.t_discomfort = 0;
    sel.report.candidates = {sel.pair};
    sel.report.chosen = sel.pair;
    sel.report.ordered = true;
    sel.report.duration_satisfied = true;
    sel.report.n_switch_single = single_threshold(values, lo, dt_step).n_switch;
    sel.labels = apply_hysteresis(series, sel.pair, dt_step);
    sel.report.n_switch = sel.labels.n_switch;
    sel.report.max_episode = sel.labels.max_episode();
    return sel;
  }
  const double e0 = epsilon0(values, t_discomfort, dt_step);
  auto candidates = candidate_pairs(values, e0, t_discomfort, dt_step);
  // The pair equivalent to the single eps0 threshold is always a candidate.
  const auto vals = sorted_unique(values);
  const auto above = std::upper_bound(vals.begin(), vals.end(), e0);
  candidates.push_back({e0, above != vals.end() ? *above : e0 + 1.0, static_cast<int>(candidates.size())});
  sel = select_pair(candidates, values, t_discomfort, e0, dt_step);
  if (!sel.report.fallback) {
    sel.labels = apply_hysteresis(series, sel.pair, dt_step);
  } else {
    LabelSeries full;
    full.dt_step = dt_step;
    full.labels.resize(series.size());
    std::size_t i = 0;
    for (std::size_t k = 0; k < series.size(); ++k) {
      full.labels[k] = series.defined[k] ? sel.labels.labels[i++] : Label::Unknown;
    }
    full.n_switch = sel.labels.n_switch;
    full.episodes = sel.labels.episodes;
    sel.labels = std::move(full);
  }
  return sel;
}

BruteForceResult brute_force_thresholds(const std::vector<double>& values, double t_discomfort, double dt_step) {
  const std::size_t n = required_steps(t_discomfort, dt_step);
  const auto vals = sorted_unique(values);
  bool have = false;
  BruteForceResult best;
  std::tuple<int, double, double> key{};
  for (std::size_t i = 0; i < vals.size(); ++i) {
    for (std::size_t j = i + 1; j < vals.size(); ++j) {
      const Eval e = evaluate(values, vals[i], vals[j]);
      if (e.max_run < n) continue;
      const std::tuple<int, double, double> k{e.n_switch, vals[j], vals[i]};
      if (!have || k < key) {
        have = true, key = k;
        best = {{vals[i], vals[j], -1}, e.n_switch, static_cast<double>(e.max_run) * dt_step};
      }
    }
  }
  if (!have) throw InfeasibleError("brute_force_thresholds: no pair of observed values satisfies the constraints");
  return best;
}

// ---------------------------------------------------------------------------

std::string serialize_labels(const TimeGrid& grid, const PresenceSeries& series, const LabelSeries& labels) {
  if (series.size() != grid.count || labels.labels.size() != grid.count) {
    throw ValidationError("serialize_labels: series length differs from the grid");
  }
  std::string out = "timestamp,label,t_op_pres\n";
  for (std::size_t k = 0; k < grid.count; ++k) {
    out += format_iso(grid.at(k));
    out += ',';
    out += to_string(labels.labels[k]);
    out += ',';
    if (series.defined[k]) out += csv::format_double(series.value[k]);
    out += '\n';
  }
  return out;
}

std::string serialize_report(const std::string& dwelling_id, const OptimizationReport& r) {
  nlohmann::json j;
  j["dwelling_id"] = dwelling_id;
  j["eps0"] = r.eps0;
  j["t_discomfort_s"] = r.t_discomfort;
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : r.candidates) j["candidates"].push_back({{"eps_min", c.eps_min}, {"eps_max", c.eps_max}});
  j["chosen"] = {{"eps_min", r.chosen.eps_min}, {"eps_max", r.chosen.eps_max}, {"candidate", r.chosen.candidate_index}};
  j["n_switch"] = r.n_switch;
  j["n_switch_single_threshold"] = r.n_switch_single;
  j["max_episode_s"] = r.max_episode;
  j["constraints"] = {{"eps_max_gt_eps_min", r.ordered}, {"max_episode_ge_t_discomfort", r.duration_satisfied}};
  j["fallback"] = r.fallback;
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump(1) + "\n";
}

LabelFile parse_labels(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  const auto table = csv::parse(in, source);
  const std::size_t ct = table.column("timestamp"), cl = table.column("label"), cv = table.column("t_op_pres");
  LabelFile f;
  const std::size_t n = table.rows.size();
  f.labels.resize(n);
  f.series.value.assign(n, kNaN);
  f.series.defined.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& row = table.rows[k];
    try {
      const Timestamp t = parse_iso(row[ct]);
      if (k == 0) f.grid.start = t;
      if (t != f.grid.start + static_cast<std::int64_t>(k) * kOutputStep) throw ParseError("row is off the 1800 s grid");
      f.labels[k] = parse_label(row[cl]);
      if (!row[cv].empty()) {
        f.series.value[k] = csv::parse_double(row[cv]);
        f.series.defined[k] = 1;
      }
    } catch (const ParseError& e) {
      throw ParseError(source + ":" + std::to_string(table.first_data_line + k) + ": " + e.what());
    }
  }
  f.grid.step = kOutputStep;
  f.grid.count = n;
  return f;
}

LabelFile read_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open label file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_labels(ss.str(), path);
}

}  // namespace comfort
