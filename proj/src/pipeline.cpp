#include "comfort/pipeline.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <chrono>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "comfort/batch.hpp"
#include "comfort/comfort_label.hpp"
#include "comfort/csv.hpp"
#include "comfort/digest.hpp"
#include "comfort/metrics.hpp"
#include "comfort/multihorizon.hpp"
#include "comfort/weather.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace comfort {

namespace {

constexpr std::array<std::pair<Stage, std::string_view>, 7> kStageNames = {{{Stage::Synth, "synth"},
                                                                          {Stage::Ingest, "ingest"},
                                                                          {Stage::Generate, "generate"},
                                                                          {Stage::Simulate, "simulate"},
                                                                          {Stage::Label, "label"},
                                                                          {Stage::Train, "train"},
                                                                          {Stage::Evaluate, "evaluate"}}};

const std::vector<std::string> kClassifiers = {"random_forest", "decision_tree", "mlp"};

std::string join_problems(const std::vector<std::string>& p) {
  std::string s = "invalid configuration (" + std::to_string(p.size()) + " problem" + (p.size() == 1 ? "" : "s") + ")";
  for (const auto& x : p) s += "\n  - " + x;
  return s;
}

}  // namespace

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> v = {Stage::Synth, Stage::Ingest, Stage::Generate, Stage::Simulate,
                                       Stage::Label, Stage::Train,  Stage::Evaluate};
  return v;
}

std::string_view to_string(Stage s) {
  for (const auto& [st, name] : kStageNames) {
    if (st == s) return name;
  }
  return "?";
}

Stage parse_stage(std::string_view s) {
  for (const auto& [st, name] : kStageNames) {
    if (name == s) return st;
  }
  throw ValidationError("unknown stage '" + std::string(s) + "'");
}

ConfigError::ConfigError(std::vector<std::string> p) : Error(join_problems(p)), problems(std::move(p)) {}

MissingArtifactError::MissingArtifactError(Stage s, const std::string& p)
    : Error("missing artifact " + p + "; run the '" + std::string(to_string(s)) + "' stage first"),
      producer(s),
      path(p) {}

fs::path PipelineConfig::survey_path() const {
  return survey.empty() ? stage_dir(Stage::Synth) / "survey.csv" : survey;
}

fs::path PipelineConfig::weather_path() const {
  return weather_dir.empty() ? stage_dir(Stage::Synth) / "weather" : weather_dir;
}

fs::path PipelineConfig::stage_dir(Stage s) const {
  switch (s) {
    case Stage::Synth: return out_dir / "synth";
    case Stage::Ingest: return out_dir / "ingest";
    case Stage::Generate: return out_dir / "models";
    case Stage::Simulate: return out_dir / "sim";
    case Stage::Label: return out_dir / "labels";
    case Stage::Train: return out_dir / "train";
    case Stage::Evaluate: return out_dir / "eval";
  }
  return out_dir;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

/// Walks a JSON document, collecting problems instead of stopping at the first.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  const json* section(const json& parent, const std::string& key, const std::string& path,
                      const std::set<std::string>& allowed) {
    if (!parent.contains(key)) return nullptr;
    const json& j = parent.at(key);
    const std::string p = path.empty() ? key : path + "." + key;
    if (!j.is_object()) {
      problems_.push_back(p + ": expected an object");
      return nullptr;
    }
    check_keys(j, p, allowed);
    return &j;
  }

  void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!allowed.count(it.key())) problems_.push_back((path.empty() ? "" : path + ".") + it.key() + ": unknown key");
    }
  }

  void number(const json* j, const std::string& path, const std::string& key, double& out, double lo, double hi,
              bool lo_open = false) {
    if (!j || !j->contains(key)) return;
    const json& v = j->at(key);
    const std::string p = path + "." + key;
    if (!v.is_number()) {
      problems_.push_back(p + ": expected a number");
      return;
    }
    const double x = v.get<double>();
    if (!(lo_open ? x > lo : x >= lo) || !(x <= hi)) {
      problems_.push_back(p + ": " + csv::format_double(x) + " outside " + (lo_open ? "(" : "[") +
                          csv::format_double(lo) + ", " + csv::format_double(hi) + "]");
      return;
    }
    out = x;
  }

  template <typename U>
  bool count(const json* j, const std::string& path, const std::string& key, U& out, std::uint64_t lo,
             std::uint64_t hi = std::numeric_limits<std::uint64_t>::max()) {
    if (!j || !j->contains(key)) return false;
    const json& v = j->at(key);
    const std::string p = path.empty() ? key : path + "." + key;
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      problems_.push_back(p + ": expected a non-negative integer");
      return false;
    }
    const auto x = v.get<std::uint64_t>();
    if (x < lo || x > hi) {
      problems_.push_back(p + ": " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
      return false;
    }
    out = static_cast<U>(x);
    return true;
  }

  void integer(const json* j, const std::string& path, const std::string& key, int& out, int lo, int hi) {
    if (!j || !j->contains(key)) return;
    const json& v = j->at(key);
    if (!v.is_number_integer() || v.get<long long>() < lo || v.get<long long>() > hi) {
      problems_.push_back(path + "." + key + ": expected an integer in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
      return;
    }
    out = v.get<int>();
  }

  void boolean(const json* j, const std::string& path, const std::string& key, bool& out) {
    if (!j || !j->contains(key)) return;
    if (!j->at(key).is_boolean()) {
      problems_.push_back(path + "." + key + ": expected true or false");
      return;
    }
    out = j->at(key).get<bool>();
  }

  void string(const json* j, const std::string& path, const std::string& key, std::string& out) {
    if (!j || !j->contains(key)) return;
    if (!j->at(key).is_string()) {
      problems_.push_back((path.empty() ? key : path + "." + key) + ": expected a string");
      return;
    }
    out = j->at(key).get<std::string>();
  }

  void strings(const json* j, const std::string& path, const std::string& key, std::vector<std::string>& out) {
    if (!j || !j->contains(key)) return;
    const json& v = j->at(key);
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); })) {
      problems_.push_back(path + "." + key + ": expected a list of strings");
      return;
    }
    out = v.get<std::vector<std::string>>();
  }

  void sizes(const json* j, const std::string& path, const std::string& key, std::vector<std::size_t>& out) {
    if (!j || !j->contains(key)) return;
    const json& v = j->at(key);
    if (!v.is_array() ||
        !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_unsigned() && e.get<long long>() > 0; })) {
      problems_.push_back(path + "." + key + ": expected a list of positive integers");
      return;
    }
    out = v.get<std::vector<std::size_t>>();
  }

  void problem(const std::string& p) { problems_.push_back(p); }

 private:
  std::vector<std::string>& problems_;
};

fs::path resolve(const std::string& p, const fs::path& base) {
  if (p.empty()) return {};
  fs::path x(p);
  return x.is_absolute() ? x.lexically_normal() : (base / x).lexically_normal();
}

const std::set<std::string> kForestKeys = {"trees",          "max_depth", "min_samples_split", "min_samples_leaf",
                                           "max_features",   "bootstrap", "max_bins",          "seed"};

bool read_forest_params(Reader& r, const json* j, const std::string& path, ForestParams& f) {
  if (!j) return false;
  r.count(j, path, "trees", f.trees, 1, 100000);
  r.count(j, path, "max_depth", f.max_depth, 0, 10000);
  r.count(j, path, "min_samples_split", f.min_samples_split, 2, 1u << 30);
  r.count(j, path, "min_samples_leaf", f.min_samples_leaf, 1, 1u << 30);
  r.count(j, path, "max_features", f.max_features, 0, 100000);
  r.boolean(j, path, "bootstrap", f.bootstrap);
  r.count(j, path, "max_bins", f.max_bins, 2, 256);
  return r.count(j, path, "seed", f.seed, 0);
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir) {
  return parse_config(text, base_dir, ConfigOverrides{});
}

PipelineConfig parse_config(const std::string& text, const fs::path& base_dir, const ConfigOverrides& ov) {
  std::vector<std::string> problems;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("not valid JSON: ") + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"top level: expected an object"});
  Reader r(problems);
  r.check_keys(root,
               "", {"out_dir", "seed", "workers", "paths", "synth", "ingest", "generation", "simulation", "labeling",
                    "split", "training"});

  PipelineConfig c;
  const fs::path base = fs::absolute(base_dir);
  std::string out = "out";
  r.string(&root, "", "out_dir", out);
  r.count(&root, "", "seed", c.seed, 0);
  r.count(&root, "", "workers", c.workers, 1, 1024);

  std::string survey, weather, templates, constructions, heaters, zones;
  if (const json* p = r.section(root, "paths", "",
                                {"survey", "weather_dir", "templates", "constructions", "heaters", "climate_zones"})) {
    r.string(p, "paths", "survey", survey);
    r.string(p, "paths", "weather_dir", weather);
    r.string(p, "paths", "templates", templates);
    r.string(p, "paths", "constructions", constructions);
    r.string(p, "paths", "heaters", heaters);
    r.string(p, "paths", "climate_zones", zones);
  }
  const fs::path data_dir = COMFORT_DATA_DIR;
  c.survey = resolve(survey, base);
  c.weather_dir = resolve(weather, base);
  c.templates = templates.empty() ? data_dir / "templates.json" : resolve(templates, base);
  c.constructions = constructions.empty() ? data_dir / "constructions.json" : resolve(constructions, base);
  c.heaters = heaters.empty() ? data_dir / "heaters.json" : resolve(heaters, base);
  c.climate_zones = zones.empty() ? data_dir / "climate_zones.json" : resolve(zones, base);

  bool synth_seed_set = false;
  if (const json* s = r.section(root, "synth", "", {"dwellings", "seed"})) {
    r.count(s, "synth", "dwellings", c.synth_dwellings, 1, 1000000);
    synth_seed_set = r.count(s, "synth", "seed", c.synth_seed, 0);
  }
  if (const json* s = r.section(root, "ingest", "", {"iqr_fields"})) r.strings(s, "ingest", "iqr_fields", c.iqr_fields);
  if (const json* s = r.section(root, "generation", "",
                                {"season_year", "neighbor_temperature", "ground_temperature", "solar_absorptance"})) {
    r.integer(s, "generation", "season_year", c.generation.season_year, 1971, 2200);
    r.number(s, "generation", "neighbor_temperature", c.generation.neighbor_temperature, -30, 40);
    r.number(s, "generation", "ground_temperature", c.generation.ground_temperature, -30, 40);
    r.number(s, "generation", "solar_absorptance", c.generation.solar_absorptance, 0, 1);
  }
  if (const json* s = r.section(root, "simulation", "",
                                {"substep", "window_close_delta", "window_ach", "furniture_multiplier",
                                 "shutter_solar_factor", "shutter_u_factor", "initial_temperature"})) {
    auto& o = c.simulation;
    r.number(s, "simulation", "substep", o.substep, 0, kOutputStep, true);
    r.number(s, "simulation", "window_close_delta", o.window_close_delta, 0, 50, true);
    r.number(s, "simulation", "window_ach", o.window_ach, 0, 100);
    r.number(s, "simulation", "furniture_multiplier", o.furniture_multiplier, 0, 100, true);
    r.number(s, "simulation", "shutter_solar_factor", o.shutter_solar_factor, 0, 1);
    r.number(s, "simulation", "shutter_u_factor", o.shutter_u_factor, 0, 1, true);
    r.number(s, "simulation", "initial_temperature", o.initial_temperature, -30, 50);
  }
  if (const json* s = r.section(root, "labeling", "",
                                {"cold_24h_hours", "cold_few_days_hours", "almost_always_fraction", "always_fraction"})) {
    auto& m = c.comfort_mapping;
    r.number(s, "labeling", "cold_24h_hours", m.cold_24h_hours, 0, 1e5, true);
    r.number(s, "labeling", "cold_few_days_hours", m.cold_few_days_hours, 0, 1e5, true);
    r.number(s, "labeling", "almost_always_fraction", m.almost_always_fraction, 0, 1, true);
    r.number(s, "labeling", "always_fraction", m.always_fraction, 0, 1, true);
  }
  bool split_seed_set = false;
  if (const json* s = r.section(root, "split", "", {"train", "val", "test", "mode", "seed"})) {
    r.number(s, "split", "train", c.split.train, 0, 1);
    r.number(s, "split", "val", c.split.val, 0, 1);
    r.number(s, "split", "test", c.split.test, 0, 1);
    std::string mode(to_string(c.split.mode));
    r.string(s, "split", "mode", mode);
    try {
      c.split.mode = parse_split_mode(mode);
    } catch (const Error&) {
      r.problem("split.mode: expected by_step or by_dwelling, got '" + mode + "'");
    }
    split_seed_set = r.count(s, "split", "seed", c.split.seed, 0);
  }
  bool forest_seed_set = false, mlp_seed_set = false, mh_seed_set = false;
  c.multihorizon_forest.trees = 50;
  if (const json* t = r.section(root, "training", "",
                                {"classifiers", "compare_split_modes", "random_forest", "decision_tree", "mlp",
                                 "multihorizon"})) {
    r.strings(t, "training", "classifiers", c.classifiers);
    r.boolean(t, "training", "compare_split_modes", c.compare_split_modes);
    forest_seed_set =
        read_forest_params(r, r.section(*t, "random_forest", "training", kForestKeys), "training.random_forest", c.forest);
    if (const json* d = r.section(*t, "decision_tree", "training", {"max_depth"})) {
      r.count(d, "training.decision_tree", "max_depth", c.tree_max_depth, 0, 10000);
    }
    if (const json* m = r.section(*t, "mlp", "training",
                                  {"hidden", "epochs", "batch", "learning_rate", "patience", "max_train_rows", "seed"})) {
      const std::string p = "training.mlp";
      r.sizes(m, p, "hidden", c.mlp.hidden);
      r.count(m, p, "epochs", c.mlp.epochs, 1, 100000);
      r.count(m, p, "batch", c.mlp.batch, 1, 1u << 30);
      r.number(m, p, "learning_rate", c.mlp.learning_rate, 0, 10, true);
      r.count(m, p, "patience", c.mlp.patience, 1, 100000);
      r.count(m, p, "max_train_rows", c.mlp.max_train_rows, 0);
      mlp_seed_set = r.count(m, p, "seed", c.mlp.seed, 0);
    }
    auto keys = kForestKeys;
    keys.insert({"enabled", "window"});
    if (const json* m = r.section(*t, "multihorizon", "training", keys)) {
      r.boolean(m, "training.multihorizon", "enabled", c.multihorizon);
      r.count(m, "training.multihorizon", "window", c.multihorizon_window, 1, 100000);
      mh_seed_set = read_forest_params(r, m, "training.multihorizon", c.multihorizon_forest);
    }
  }

  if (ov.seed) c.seed = *ov.seed;
  if (ov.workers) {
    if (*ov.workers < 1) r.problem("--workers: must be >= 1");
    c.workers = *ov.workers;
  }
  if (!synth_seed_set) c.synth_seed = c.seed;
  if (!split_seed_set) c.split.seed = c.seed;
  if (!forest_seed_set) c.forest.seed = c.seed;
  if (!mlp_seed_set) c.mlp.seed = c.seed;
  if (!mh_seed_set) c.multihorizon_forest.seed = c.seed;
  c.forest.workers = c.multihorizon_forest.workers = c.workers;
  c.out_dir = ov.out_dir ? fs::absolute(*ov.out_dir).lexically_normal() : resolve(out, base);

  // Cross-field checks.
  try {
    validate(c.split);
  } catch (const Error& e) {
    r.problem(std::string("split: ") + e.what());
  }
  try {
    validate(c.simulation);
  } catch (const Error& e) {
    r.problem(std::string("simulation: ") + e.what());
  }
  const auto& m = c.comfort_mapping;
  if (!(m.cold_24h_hours < m.cold_few_days_hours)) r.problem("labeling: cold_24h_hours must be below cold_few_days_hours");
  if (!(m.almost_always_fraction < m.always_fraction)) {
    r.problem("labeling: almost_always_fraction must be below always_fraction");
  }
  for (const auto& f : c.iqr_fields) {
    if (!is_numeric_field(f)) r.problem("ingest.iqr_fields: '" + f + "' is not a numeric survey field");
  }
  for (const auto& k : c.classifiers) {
    if (std::find(kClassifiers.begin(), kClassifiers.end(), k) == kClassifiers.end()) {
      r.problem("training.classifiers: unknown classifier '" + k + "'");
    }
  }
  auto must_exist = [&](const fs::path& p, const std::string& what, bool dir) {
    if (p.empty()) return;
    std::error_code ec;
    if (dir ? !fs::is_directory(p, ec) : !fs::is_regular_file(p, ec)) {
      r.problem(what + ": " + p.string() + (dir ? " is not a directory" : " does not exist"));
    }
  };
  must_exist(c.survey, "paths.survey", false);
  must_exist(c.weather_dir, "paths.weather_dir", true);
  must_exist(c.templates, "paths.templates", false);
  must_exist(c.constructions, "paths.constructions", false);
  must_exist(c.heaters, "paths.heaters", false);
  must_exist(c.climate_zones, "paths.climate_zones", false);
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open configuration file " + path.string()});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path());
}

namespace {

json forest_json(const ForestParams& f) {
  return {{"trees", f.trees},
          {"max_depth", f.max_depth},
          {"min_samples_split", f.min_samples_split},
          {"min_samples_leaf", f.min_samples_leaf},
          {"max_features", f.max_features},
          {"bootstrap", f.bootstrap},
          {"max_bins", f.max_bins},
          {"seed", f.seed}};
}

json config_json(const PipelineConfig& c, bool with_execution) {
  json j;
  if (with_execution) {
    j["out_dir"] = c.out_dir.string();
    j["workers"] = c.workers;
  }
  j["seed"] = c.seed;
  j["paths"] = {{"survey", c.survey.string()},
                {"weather_dir", c.weather_dir.string()},
                {"templates", c.templates.string()},
                {"constructions", c.constructions.string()},
                {"heaters", c.heaters.string()},
                {"climate_zones", c.climate_zones.string()}};
  j["synth"] = {{"dwellings", c.synth_dwellings}, {"seed", c.synth_seed}};
  j["ingest"] = {{"iqr_fields", c.iqr_fields}};
  j["generation"] = {{"season_year", c.generation.season_year},
                     {"neighbor_temperature", c.generation.neighbor_temperature},
                     {"ground_temperature", c.generation.ground_temperature},
                     {"solar_absorptance", c.generation.solar_absorptance}};
  const auto& s = c.simulation;
  j["simulation"] = {{"substep", s.substep},
                     {"window_close_delta", s.window_close_delta},
                     {"window_ach", s.window_ach},
                     {"furniture_multiplier", s.furniture_multiplier},
                     {"shutter_solar_factor", s.shutter_solar_factor},
                     {"shutter_u_factor", s.shutter_u_factor},
                     {"initial_temperature", s.initial_temperature}};
  const auto& m = c.comfort_mapping;
  j["labeling"] = {{"cold_24h_hours", m.cold_24h_hours},
                   {"cold_few_days_hours", m.cold_few_days_hours},
                   {"almost_always_fraction", m.almost_always_fraction},
                   {"always_fraction", m.always_fraction}};
  j["split"] = {{"train", c.split.train},
                {"val", c.split.val},
                {"test", c.split.test},
                {"mode", std::string(to_string(c.split.mode))},
                {"seed", c.split.seed}};
  json mh = forest_json(c.multihorizon_forest);
  mh["enabled"] = c.multihorizon;
  mh["window"] = c.multihorizon_window;
  j["training"] = {{"classifiers", c.classifiers},
                   {"compare_split_modes", c.compare_split_modes},
                   {"random_forest", forest_json(c.forest)},
                   {"decision_tree", {{"max_depth", c.tree_max_depth}}},
                   {"mlp",
                    {{"hidden", c.mlp.hidden},
                     {"epochs", c.mlp.epochs},
                     {"batch", c.mlp.batch},
                     {"learning_rate", c.mlp.learning_rate},
                     {"patience", c.mlp.patience},
                     {"max_train_rows", c.mlp.max_train_rows},
                     {"seed", c.mlp.seed}}},
                   {"multihorizon", mh}};
  return j;
}

}  // namespace

std::string config_to_json(const PipelineConfig& c) { return config_json(c, true).dump(2) + "\n"; }

// Execution-only settings (output location, worker count) do not change any
// artifact and are left out of the digest.
std::string config_digest(const PipelineConfig& c) { return sha256_hex(config_json(c, false).dump()); }

// ---------------------------------------------------------------------------
// Stage helpers

namespace {

void write_text(const fs::path& p, const std::string& text, StageReport& rep) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed for " + p.string());
  rep.artifacts.push_back(p);
}

void fresh_dir(const fs::path& d) {
  fs::remove_all(d);
  fs::create_directories(d);
}

void require(const fs::path& p, Stage producer) {
  std::error_code ec;
  if (!fs::exists(p, ec)) throw MissingArtifactError(producer, p.string());
}

std::string index_csv(const std::vector<std::string>& ids) {
  std::string s = "dwelling_id\n";
  for (const auto& id : ids) s += csv::join_line({id}) + "\n";
  return s;
}

std::vector<std::string> read_index(const fs::path& p, Stage producer) {
  require(p, producer);
  const auto t = csv::read(p.string());
  const auto col = t.column("dwelling_id");
  std::vector<std::string> ids;
  for (const auto& row : t.rows) ids.push_back(row.at(col));
  return ids;
}

fs::path weather_file(const PipelineConfig& c, int zone) {
  return c.weather_path() / ("zone_" + std::to_string(zone) + ".csv");
}

std::map<std::string, SurveyRecord> clean_survey(const PipelineConfig& c) {
  const auto p = c.stage_dir(Stage::Ingest) / "survey_clean.csv";
  require(p, Stage::Ingest);
  std::map<std::string, SurveyRecord> m;
  for (auto& r : parse_survey(p.string())) m.emplace(r.dwelling_id, std::move(r));
  return m;
}

// ---------------------------------------------------------------------------

StageReport stage_synth(const PipelineConfig& c, std::ostream& log) {
  StageReport rep;
  const auto dir = c.stage_dir(Stage::Synth);
  fresh_dir(dir);
  if (c.survey.empty()) {
    const auto recs = synth_survey(c.synth_dwellings, c.synth_seed);
    write_text(dir / "survey.csv", serialize_survey(recs), rep);
    rep.counts["dwellings"] = static_cast<long>(recs.size());
  } else {
    log << "  survey supplied by configuration; not synthesized\n";
  }
  if (c.weather_dir.empty()) {
    const auto climate = load_climate_table(c.climate_zones.string());
    const auto grid = heating_season_grid(c.generation.season_year);
    for (const auto& z : climate.zones) {
      const auto w = synth_weather(z, c.synth_seed, grid.start, grid.at(grid.count - 1));
      write_text(weather_file(c, z.id), serialize_weather(w), rep);
    }
    rep.counts["weather_zones"] = static_cast<long>(climate.zones.size());
  } else {
    log << "  weather supplied by configuration; not synthesized\n";
  }
  return rep;
}

StageReport stage_ingest(const PipelineConfig& c, std::ostream&) {
  StageReport rep;
  const auto src = c.survey_path();
  require(src, Stage::Synth);
  const auto recs = parse_survey(src.string());
  if (recs.empty()) throw Error("survey " + src.string() + " holds no records");
  const auto res = iqr_filter(recs, c.iqr_fields);
  const auto dir = c.stage_dir(Stage::Ingest);
  fresh_dir(dir);
  write_text(dir / "survey_clean.csv", serialize_survey(res.kept), rep);
  write_text(dir / "rejected.csv", serialize_rejected(res.rejected), rep);
  json b = json::array();
  for (const auto& x : res.bounds) {
    b.push_back({{"field", x.field}, {"q1", x.q1}, {"q3", x.q3}, {"lower", x.lower}, {"upper", x.upper}});
  }
  write_text(dir / "iqr_bounds.json", b.dump(1) + "\n", rep);
  rep.counts["input"] = static_cast<long>(recs.size());
  rep.counts["kept"] = static_cast<long>(res.kept.size());
  rep.counts["rejected"] = static_cast<long>(res.rejected.size());
  return rep;
}

StageReport stage_generate(const PipelineConfig& c, std::ostream&) {
  StageReport rep;
  const auto src = c.stage_dir(Stage::Ingest) / "survey_clean.csv";
  require(src, Stage::Ingest);
  const auto recs = parse_survey(src.string());
  const auto templates = load_templates(c.templates.string());
  const auto constructions = load_constructions(c.constructions.string());
  const auto heaters = load_heater_defaults(c.heaters.string());
  const auto climate = load_climate_table(c.climate_zones.string());
  std::vector<std::string> text(recs.size()), error(recs.size());
  parallel_for(recs.size(), c.workers, [&](std::size_t i) {
    try {
      const auto& r = recs[i];
      const auto d = build_model(r, templates.for_type(r.dwelling_type), select_record(constructions, r.construction_era),
                                 climate, heaters, c.generation);
      text[i] = serialize_dwelling(d);
    } catch (const std::exception& e) {
      error[i] = e.what();
    }
  });
  const auto dir = c.stage_dir(Stage::Generate);
  fresh_dir(dir);
  std::vector<std::string> ids;
  std::string failures = "dwelling_id,message\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (!error[i].empty()) {
      failures += csv::join_line({recs[i].dwelling_id, error[i]}) + "\n";
      rep.warnings.push_back(recs[i].dwelling_id + ": " + error[i]);
      continue;
    }
    write_text(dir / (recs[i].dwelling_id + ".json"), text[i], rep);
    ids.push_back(recs[i].dwelling_id);
  }
  write_text(dir / "index.csv", index_csv(ids), rep);
  write_text(dir / "failures.csv", failures, rep);
  rep.counts["generated"] = static_cast<long>(ids.size());
  rep.counts["failed"] = static_cast<long>(recs.size() - ids.size());
  if (ids.empty() && !recs.empty()) throw Error("no dwelling model could be generated");
  return rep;
}

StageReport stage_simulate(const PipelineConfig& c, std::ostream& log) {
  StageReport rep;
  const auto mdir = c.stage_dir(Stage::Generate);
  const auto ids = read_index(mdir / "index.csv", Stage::Generate);
  for (const auto& id : ids) require(mdir / (id + ".json"), Stage::Generate);
  const auto dir = c.stage_dir(Stage::Simulate);
  fresh_dir(dir);

  std::map<int, WeatherSeries> weather;
  std::vector<std::string> done;
  std::vector<BatchFailure> failures;
  double sim_seconds = 0;
  long steps = 0;
  // Chunks bound memory; results never depend on the chunking.
  const std::size_t chunk = std::max<std::size_t>(8, 2 * c.workers);
  for (std::size_t b = 0; b < ids.size(); b += chunk) {
    std::vector<GeneratedDwelling> batch;
    for (std::size_t i = b; i < std::min(ids.size(), b + chunk); ++i) {
      batch.push_back(read_dwelling((mdir / (ids[i] + ".json")).string()));
      const int z = batch.back().model.climate_zone;
      if (!weather.count(z)) {
        const auto wf = weather_file(c, z);
        require(wf, Stage::Synth);
        weather.emplace(z, load_weather(wf.string()));
      }
    }
    auto res = batch_simulate(batch, weather, c.workers, c.simulation);
    sim_seconds += res.wall_seconds;
    for (auto& r : res.results) {
      if (!r) continue;
      write_text(dir / (r->dwelling_id + ".csv"), serialize_result(*r), rep);
      done.push_back(r->dwelling_id);
      steps = static_cast<long>(r->grid.count);
    }
    for (auto& f : res.failures) {
      log << "  simulation failed: " << f.message << "\n";
      rep.warnings.push_back(f.message);
      failures.push_back(std::move(f));
    }
  }
  write_text(dir / "index.csv", index_csv(done), rep);
  write_text(dir / "failures.csv", serialize_failures(failures), rep);
  rep.counts["dwellings"] = static_cast<long>(ids.size());
  rep.counts["succeeded"] = static_cast<long>(done.size());
  rep.counts["failed"] = static_cast<long>(failures.size());
  rep.counts["steps_per_dwelling"] = steps;
  log << "  simulated " << done.size() << " dwellings in " << sim_seconds << " s on " << c.workers << " worker(s)\n";
  if (done.empty() && !ids.empty()) throw Error("every dwelling simulation failed");
  return rep;
}

StageReport stage_label(const PipelineConfig& c, std::ostream&) {
  StageReport rep;
  const auto sdir = c.stage_dir(Stage::Simulate);
  const auto ids = read_index(sdir / "index.csv", Stage::Simulate);
  for (const auto& id : ids) require(sdir / (id + ".csv"), Stage::Simulate);
  const auto survey = clean_survey(c);

  struct Out {
    std::string labels, report, summary, error;
    bool fallback = false;
    long discomfort = 0;
  };
  std::vector<Out> outs(ids.size());
  parallel_for(ids.size(), c.workers, [&](std::size_t i) {
    auto& o = outs[i];
    try {
      const auto it = survey.find(ids[i]);
      if (it == survey.end()) throw Error("no survey record for " + ids[i]);
      const auto sim = read_result((sdir / (ids[i] + ".csv")).string());
      std::vector<std::vector<double>> t_op;
      std::vector<std::vector<std::uint8_t>> presence;
      for (const auto& r : sim.rooms) {
        t_op.push_back(r.t_op);
        presence.push_back(r.presence);
      }
      const auto series = presence_op_temp(t_op, presence);
      const auto occupied = std::count(series.defined.begin(), series.defined.end(), std::uint8_t{1});
      const double dt = static_cast<double>(sim.grid.step);
      const double t =
          map_comfort_category(it->second.comfort_answer, static_cast<double>(occupied) * dt, c.comfort_mapping);
      const auto sel = label_series(series, t, dt);
      o.labels = serialize_labels(sim.grid, series, sel.labels);
      o.report = serialize_report(ids[i], sel.report);
      o.fallback = sel.report.fallback;
      o.discomfort = std::count(sel.labels.labels.begin(), sel.labels.labels.end(), Label::Discomfort);
      o.summary = csv::join_line({ids[i], std::string(to_string(it->second.comfort_answer)), csv::format_double(t),
                                  csv::format_double(sel.pair.eps_min), csv::format_double(sel.pair.eps_max),
                                  std::to_string(sel.report.n_switch), std::to_string(sel.report.n_switch_single),
                                  csv::format_double(sel.report.max_episode), sel.report.fallback ? "1" : "0"});
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });
  const auto dir = c.stage_dir(Stage::Label);
  fresh_dir(dir);
  std::vector<std::string> done;
  std::string failures = "dwelling_id,message\n";
  std::string summary =
      "dwelling_id,comfort_answer,t_discomfort_s,eps_min,eps_max,n_switch,n_switch_single,max_episode_s,fallback\n";
  long fallback = 0, discomfort = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& o = outs[i];
    if (!o.error.empty()) {
      failures += csv::join_line({ids[i], o.error}) + "\n";
      rep.warnings.push_back(ids[i] + ": " + o.error);
      continue;
    }
    write_text(dir / (ids[i] + ".csv"), o.labels, rep);
    write_text(dir / (ids[i] + "_report.json"), o.report, rep);
    summary += o.summary + "\n";
    done.push_back(ids[i]);
    fallback += o.fallback;
    discomfort += o.discomfort;
  }
  write_text(dir / "index.csv", index_csv(done), rep);
  write_text(dir / "failures.csv", failures, rep);
  write_text(dir / "summary.csv", summary, rep);
  rep.counts["labeled"] = static_cast<long>(done.size());
  rep.counts["failed"] = static_cast<long>(ids.size() - done.size());
  rep.counts["fallback"] = fallback;
  rep.counts["discomfort_steps"] = discomfort;
  if (done.empty() && !ids.empty()) throw Error("no dwelling could be labeled");
  return rep;
}

// Appends `part` (one dwelling) to `into`, renumbering its dwelling index.
void append_dataset(Dataset& into, const Dataset& part) {
  if (into.feature_names.empty()) into.feature_names = part.feature_names;
  const auto base = static_cast<std::uint32_t>(into.dwellings.size());
  into.dwellings.insert(into.dwellings.end(), part.dwellings.begin(), part.dwellings.end());
  into.x.insert(into.x.end(), part.x.begin(), part.x.end());
  into.y.insert(into.y.end(), part.y.begin(), part.y.end());
  for (auto d : part.dwelling) into.dwelling.push_back(base + d);
  into.step.insert(into.step.end(), part.step.begin(), part.step.end());
}

Dataset load_dataset(const PipelineConfig& c) {
  const auto ldir = c.stage_dir(Stage::Label), sdir = c.stage_dir(Stage::Simulate);
  const auto ids = read_index(ldir / "index.csv", Stage::Label);
  const auto survey = clean_survey(c);
  Dataset d;
  d.feature_names = dataset_feature_names();
  for (const auto& id : ids) {
    require(sdir / (id + ".csv"), Stage::Simulate);
    require(ldir / (id + ".csv"), Stage::Label);
    const auto it = survey.find(id);
    if (it == survey.end()) throw Error("no survey record for " + id);
    const auto sim = read_result((sdir / (id + ".csv")).string());
    const auto lab = read_labels((ldir / (id + ".csv")).string());
    append_dataset(d, assemble_dataset({DwellingInputs{&sim, &lab, &it->second}}));
  }
  if (d.rows() < 3) throw Error("dataset has fewer than 3 rows");
  return d;
}

SplitMode other_mode(SplitMode m) { return m == SplitMode::ByStep ? SplitMode::ByDwelling : SplitMode::ByStep; }

std::string model_name(const std::string& clf, SplitMode m) { return clf + "_" + std::string(to_string(m)); }

struct ModelJob {
  std::string classifier;
  SplitMode mode;
};

std::vector<ModelJob> model_jobs(const PipelineConfig& c) {
  std::vector<ModelJob> jobs;
  for (const auto& k : c.classifiers) jobs.push_back({k, c.split.mode});
  const bool has_rf = std::find(c.classifiers.begin(), c.classifiers.end(), "random_forest") != c.classifiers.end();
  if (c.compare_split_modes && has_rf) jobs.push_back({"random_forest", other_mode(c.split.mode)});
  return jobs;
}

SplitSpec with_mode(SplitSpec s, SplitMode m) {
  s.mode = m;
  return s;
}

StageReport stage_train(const PipelineConfig& c, std::ostream& log) {
  StageReport rep;
  const auto d = load_dataset(c);
  const auto dir = c.stage_dir(Stage::Train);
  fresh_dir(dir);
  std::map<SplitMode, Split> splits;
  for (const auto& job : model_jobs(c)) {
    if (!splits.count(job.mode)) splits.emplace(job.mode, split_dataset(d, with_mode(c.split, job.mode)));
    const auto& sp = splits.at(job.mode);
    const auto train = subset(d, sp.train);
    const auto name = model_name(job.classifier, job.mode);
    const auto t0 = std::chrono::steady_clock::now();
    if (job.classifier == "random_forest") {
      write_text(dir / (name + ".model"), serialize_forest(train_random_forest(train, c.forest)), rep);
    } else if (job.classifier == "decision_tree") {
      write_text(dir / (name + ".model"),
                 serialize_forest(train_decision_tree(train, c.tree_max_depth, 1, c.forest.seed)), rep);
    } else {
      const auto m = train_mlp(train, subset(d, sp.val), c.mlp);
      write_text(dir / (name + ".model"), serialize_mlp(m), rep);
      std::string h = "epoch,train_loss,val_loss\n";
      for (std::size_t e = 0; e < m.train_loss.size(); ++e) {
        h += std::to_string(e + 1) + "," + csv::format_double(m.train_loss[e]) + "," +
             csv::format_double(m.val_loss[e]) + "\n";
      }
      write_text(dir / (name + "_history.csv"), h, rep);
    }
    log << "  trained " << name << " on " << train.rows() << " rows in "
        << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  }
  if (c.multihorizon) {
    if (!splits.count(SplitMode::ByDwelling)) {
      splits.emplace(SplitMode::ByDwelling, split_dataset(d, with_mode(c.split, SplitMode::ByDwelling)));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto train = subset(d, splits.at(SplitMode::ByDwelling).train);
    MultihorizonParams p{c.multihorizon_window, c.multihorizon_forest};
    write_text(dir / "multihorizon.model", serialize_multihorizon(train_multihorizon(train, p)), rep);
    log << "  trained multihorizon in " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
        << " s\n";
  }
  std::array<long, kClassCount> classes{};
  for (int y : d.y) ++classes[static_cast<std::size_t>(y)];
  json info = {{"rows", d.rows()},
               {"features", d.feature_names},
               {"dwellings", d.dwellings.size()},
               {"digest", dataset_digest(d)},
               {"class_counts",
                {{"comfort", classes[0]}, {"discomfort", classes[1]}, {"unknown", classes[2]}}}};
  json sj = json::object();
  for (const auto& [mode, sp] : splits) {
    sj[std::string(to_string(mode))] = {{"train", sp.train.size()}, {"val", sp.val.size()}, {"test", sp.test.size()}};
  }
  info["splits"] = sj;
  write_text(dir / "dataset.json", info.dump(1) + "\n", rep);
  rep.counts["rows"] = static_cast<long>(d.rows());
  rep.counts["dwellings"] = static_cast<long>(d.dwellings.size());
  return rep;
}

json metrics_json(const std::vector<int>& pred, const std::vector<int>& truth) {
  static const std::array<const char*, kClassCount> names = {"comfort", "discomfort", "unknown"};
  const auto cm = confusion(pred, truth, kClassCount);
  json classes = json::object();
  for (int k = 0; k < kClassCount; ++k) {
    const auto m = cm.of(k);
    classes[names[static_cast<std::size_t>(k)]] = {{"precision", m.precision}, {"recall", m.recall},
                                                   {"f1", m.f1},               {"support", m.support},
                                                   {"zero_division", m.zero_division}};
  }
  return {{"rows", truth.size()}, {"accuracy", accuracy(pred, truth)}, {"classes", classes}, {"confusion", cm.counts}};
}

StageReport stage_evaluate(const PipelineConfig& c, std::ostream&) {
  StageReport rep;
  const auto tdir = c.stage_dir(Stage::Train);
  const auto jobs = model_jobs(c);
  for (const auto& job : jobs) require(tdir / (model_name(job.classifier, job.mode) + ".model"), Stage::Train);
  if (c.multihorizon) require(tdir / "multihorizon.model", Stage::Train);
  const auto d = load_dataset(c);
  std::map<SplitMode, Split> splits;
  json by_mode = json::object();
  for (const auto& job : jobs) {
    if (!splits.count(job.mode)) splits.emplace(job.mode, split_dataset(d, with_mode(c.split, job.mode)));
    const auto test = subset(d, splits.at(job.mode).test);
    const auto path = (tdir / (model_name(job.classifier, job.mode) + ".model")).string();
    std::vector<int> pred;
    if (job.classifier == "mlp") {
      pred = read_mlp(path).predict(test);
    } else {
      pred = comfort::read_forest(path).predict(test);
    }
    by_mode[std::string(to_string(job.mode))][job.classifier] = metrics_json(pred, test.y);
  }
  json out = {{"config_digest", config_digest(c)},
              {"seed", c.seed},
              {"split_seed", c.split.seed},
              {"primary_split", std::string(to_string(c.split.mode))},
              {"dataset_digest", dataset_digest(d)},
              {"splits", by_mode}};
  if (c.multihorizon) {
    if (!splits.count(SplitMode::ByDwelling)) {
      splits.emplace(SplitMode::ByDwelling, split_dataset(d, with_mode(c.split, SplitMode::ByDwelling)));
    }
    const auto test = subset(d, splits.at(SplitMode::ByDwelling).test);
    const auto model = read_multihorizon((tdir / "multihorizon.model").string());
    const auto tf = predict_multihorizon(model, test, HorizonMode::TeacherForced, c.workers);
    const auto rec = predict_multihorizon(model, test, HorizonMode::Recursive, c.workers);
    const auto differs = std::count(rec.window_differs.begin(), rec.window_differs.end(), std::uint8_t{1});
    out["multihorizon"] = {{"window", model.window},
                           {"split", "by_dwelling"},
                           {"teacher_forced", metrics_json(tf.predicted, tf.truth)},
                           {"recursive", metrics_json(rec.predicted, rec.truth)},
                           {"recursive_window_differs_fraction",
                            rec.rows.empty() ? 0.0 : static_cast<double>(differs) / static_cast<double>(rec.rows.size())}};
  }
  const auto dir = c.stage_dir(Stage::Evaluate);
  fresh_dir(dir);
  write_text(dir / "metrics.json", out.dump(1) + "\n", rep);
  rep.counts["test_models"] = static_cast<long>(jobs.size() + (c.multihorizon ? 1 : 0));
  return rep;
}

}  // namespace

StageReport run_stage(Stage stage, const PipelineConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  StageReport rep;
  switch (stage) {
    case Stage::Synth: rep = stage_synth(cfg, log); break;
    case Stage::Ingest: rep = stage_ingest(cfg, log); break;
    case Stage::Generate: rep = stage_generate(cfg, log); break;
    case Stage::Simulate: rep = stage_simulate(cfg, log); break;
    case Stage::Label: rep = stage_label(cfg, log); break;
    case Stage::Train: rep = stage_train(cfg, log); break;
    case Stage::Evaluate: rep = stage_evaluate(cfg, log); break;
  }
  rep.stage = stage;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

json load_manifest(const fs::path& p, const std::string& digest) {
  std::ifstream in(p);
  if (in) {
    try {
      json j = json::parse(in);
      if (j.value("config_digest", "") == digest) return j;
    } catch (const json::exception&) {
    }
  }
  return json::object();
}

void save_manifest(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << j.dump(2) << "\n";
}

}  // namespace

int run_pipeline(const PipelineConfig& cfg, const std::vector<Stage>& requested, std::ostream& log) {
  const auto stages = requested.empty() ? all_stages() : requested;
  const auto mpath = cfg.out_dir / "manifest.json";
  const auto digest = config_digest(cfg);
  json m = load_manifest(mpath, digest);
  m["format"] = "comfortsim-manifest-1";
  m["config_digest"] = digest;
  m["config"] = json::parse(config_to_json(cfg));
  m["seeds"] = {{"master", cfg.seed},
                {"synth", cfg.synth_seed},
                {"split", cfg.split.seed},
                {"random_forest", cfg.forest.seed},
                {"mlp", cfg.mlp.seed},
                {"multihorizon", cfg.multihorizon_forest.seed}};
  if (!m.contains("stages")) m["stages"] = json::object();
  if (!m.contains("artifacts")) m["artifacts"] = json::object();

  for (Stage s : stages) {
    const std::string name(to_string(s));
    log << "[" << name << "] running\n";
    json entry;
    int code = kExitOk;
    try {
      const auto rep = run_stage(s, cfg, log);
      entry = {{"status", "ok"}, {"seconds", rep.seconds}, {"counts", rep.counts}, {"warnings", rep.warnings}};
      // Replace this stage's artifacts.
      const auto prefix = fs::relative(cfg.stage_dir(s), cfg.out_dir).generic_string() + "/";
      for (auto it = m["artifacts"].begin(); it != m["artifacts"].end();) {
        if (it.key().rfind(prefix, 0) == 0) {
          it = m["artifacts"].erase(it);
        } else {
          ++it;
        }
      }
      for (const auto& a : rep.artifacts) {
        const auto rel = fs::relative(a, cfg.out_dir).generic_string();
        m["artifacts"][rel] = sha256_file(a);
      }
      log << "[" << name << "] done in " << rep.seconds << " s";
      for (const auto& [k, v] : rep.counts) log << " " << k << "=" << v;
      log << "\n";
    } catch (const MissingArtifactError& e) {
      log << "[" << name << "] error: " << e.what() << "\n";
      entry = {{"status", "missing_artifact"}, {"error", e.what()}, {"rerun_stage", std::string(to_string(e.producer))}};
      code = kExitMissingArtifact;
    } catch (const std::exception& e) {
      log << "[" << name << "] failed: " << e.what() << "\n";
      entry = {{"status", "failed"}, {"error", e.what()}};
      code = kExitStageFailure;
    }
    m["stages"][name] = entry;
    save_manifest(mpath, m);
    if (code != kExitOk) return code;
  }
  return kExitOk;
}

std::map<std::string, std::string> manifest_artifacts(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open manifest " + p.string());
  const json j = json::parse(in);
  return j.at("artifacts").get<std::map<std::string, std::string>>();
}

}  // namespace comfort
