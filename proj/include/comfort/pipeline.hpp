#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "comfort/building.hpp"
#include "comfort/dataset.hpp"
#include "comfort/error.hpp"
#include "comfort/forest.hpp"
#include "comfort/mlp.hpp"
#include "comfort/survey.hpp"
#include "comfort/thermal.hpp"

namespace comfort {

enum class Stage { Synth, Ingest, Generate, Simulate, Label, Train, Evaluate };
const std::vector<Stage>& all_stages();
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

/// Every problem found while validating a configuration, one per entry.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  std::vector<std::string> problems;
};

/// An input a stage needs is absent; `producer` is the stage that writes it.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(Stage producer, const std::string& path);
  Stage producer;
  std::string path;
};

struct PipelineConfig {
  std::filesystem::path out_dir = "out";
  // Empty survey / weather_dir: the synth stage writes them under out_dir.
  std::filesystem::path survey;
  std::filesystem::path weather_dir;
  std::filesystem::path templates, constructions, heaters, climate_zones;

  std::uint64_t seed = 1;
  std::size_t workers = 1;

  std::size_t synth_dwellings = 100;
  std::uint64_t synth_seed = 1;

  std::vector<std::string> iqr_fields = {"floor_area"};
  GenerationOptions generation;
  SimulationOptions simulation;
  ComfortMapping comfort_mapping;

  SplitSpec split;
  bool compare_split_modes = true;
  std::vector<std::string> classifiers = {"random_forest", "decision_tree", "mlp"};
  ForestParams forest;
  std::size_t tree_max_depth = 0;
  MlpParams mlp;
  bool multihorizon = true;
  std::size_t multihorizon_window = 48;
  ForestParams multihorizon_forest;

  std::filesystem::path survey_path() const;
  std::filesystem::path weather_path() const;
  std::filesystem::path stage_dir(Stage s) const;
};

/// Parses and validates a JSON configuration. Relative paths resolve against
/// `base_dir`; unset data paths point at the bundled data directory.
/// Throws ConfigError listing every problem.
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = ".");
PipelineConfig load_config(const std::filesystem::path& path);
/// Applies command-line overrides, then derives component seeds from `seed`
/// where the file left them unset.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::filesystem::path> out_dir;
};
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir,
                            const ConfigOverrides& overrides);
/// Fully resolved configuration including defaults.
std::string config_to_json(const PipelineConfig& c);
std::string config_digest(const PipelineConfig& c);

struct StageReport {
  Stage stage = Stage::Synth;
  double seconds = 0;
  std::map<std::string, long> counts;
  std::vector<std::filesystem::path> artifacts;  // absolute paths written
  std::vector<std::string> warnings;
};

/// Runs one stage against artifacts on disk. Throws MissingArtifactError when
/// an upstream artifact is absent.
StageReport run_stage(Stage stage, const PipelineConfig& cfg, std::ostream& log);

enum ExitCode : int { kExitOk = 0, kExitStageFailure = 1, kExitConfigError = 2, kExitMissingArtifact = 3 };

/// Runs the given stages in order (all of them when empty), updating
/// out_dir/manifest.json after each one. Returns an ExitCode.
int run_pipeline(const PipelineConfig& cfg, const std::vector<Stage>& stages, std::ostream& log);

/// Artifact path -> SHA-256 as recorded in a manifest.
std::map<std::string, std::string> manifest_artifacts(const std::filesystem::path& manifest_path);

}  // namespace comfort
