#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "comfort/pipeline.hpp"
#include "fixtures.hpp"

using namespace comfort;
namespace fs = std::filesystem;

namespace {

// Small enough to run every stage in seconds.
const char* kSmallConfig = R"({
  "seed": 3,
  "workers": 2,
  "synth": {"dwellings": 8},
  "training": {
    "random_forest": {"trees": 6, "max_bins": 32},
    "mlp": {"hidden": [8], "epochs": 2, "max_train_rows": 4000},
    "multihorizon": {"window": 4, "trees": 4}
  }
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

// Runs the CLI; returns its exit status and leaves stderr in `err`.
int cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(COMFORTSIM_BIN) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

PipelineConfig small(const fs::path& out) {
  return parse_config(kSmallConfig, ".", ConfigOverrides{{}, {}, out});
}

}  // namespace

TEST_CASE("config: every problem is reported") {
  const std::string bad = R"({
    "seed": "x", "workers": 0, "bogus": 1,
    "split": {"train": 0.9, "mode": "random"},
    "simulation": {"substep": 7},
    "training": {"classifiers": ["random_forest", "svm"], "mlp": {"hidden": [0]}},
    "paths": {"survey": "/nonexistent/survey.csv"}
  })";
  try {
    parse_config(bad);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const auto has = [&](const std::string& needle) {
      for (const auto& p : e.problems) {
        if (p.find(needle) != std::string::npos) return true;
      }
      return false;
    };
    CHECK(has("seed"));
    CHECK(has("workers"));
    CHECK(has("bogus"));
    CHECK(has("split.mode"));
    CHECK(has("split"));
    CHECK(has("sub-step"));
    CHECK(has("svm"));
    CHECK(has("hidden"));
    CHECK(has("survey"));
    CHECK(e.problems.size() >= 9);
    CHECK(std::string(e.what()).find("problems") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_NOTHROW(parse_config("{}"));
}

TEST_CASE("config: seeds derive from the master seed unless set") {
  const auto a = parse_config(R"({"seed": 5})"), b = parse_config(R"({"seed": 6})");
  CHECK(a.forest.seed != b.forest.seed);
  CHECK(a.split.seed != b.split.seed);
  CHECK(a.synth_seed != b.synth_seed);
  const auto pinned = parse_config(R"({"seed": 6, "split": {"seed": 77}})");
  CHECK(pinned.split.seed == 77);
  CHECK(config_digest(a) != config_digest(b));
  const auto moved = parse_config(R"({"seed": 5, "workers": 3, "out_dir": "elsewhere"})");
  CHECK(config_digest(moved) == config_digest(a));
  const auto over = parse_config(R"({"seed": 5})", ".", ConfigOverrides{9, 2, {}});
  CHECK(over.seed == 9);
  CHECK(over.workers == 2);
  CHECK(nlohmann::json::parse(config_to_json(a))["seed"] == 5);
}

TEST_CASE("a stage without its inputs names the producing stage") {
  const auto dir = fixtures::temp_dir("missing");
  const auto cfg = small(dir / "out");
  std::ostringstream log;
  CHECK(run_pipeline(cfg, {Stage::Simulate}, log) == kExitMissingArtifact);
  CHECK(log.str().find("generate") != std::string::npos);

  const auto err = dir / "err.txt";
  CHECK(cli("simulate --out " + (dir / "out2").string(), err) == kExitMissingArtifact);
  CHECK(slurp(err).find("generate") != std::string::npos);
  CHECK_THROWS_AS(run_stage(Stage::Label, cfg, log), MissingArtifactError);
}

TEST_CASE("cli: configuration and usage errors exit 2") {
  const auto dir = fixtures::temp_dir("cli_config");
  const auto err = dir / "err.txt";
  const auto cfg = write_config(dir, R"({"workers": 0, "bogus": true})");
  CHECK(cli("check-config --config " + cfg.string(), err) == kExitConfigError);
  const auto text = slurp(err);
  CHECK(text.find("workers") != std::string::npos);
  CHECK(text.find("bogus") != std::string::npos);
  CHECK(cli("pipeline --stage simulate,nonsense", err) == kExitConfigError);
  CHECK(cli("no-such-command", err) == kExitConfigError);
  CHECK(cli("check-config", err) == kExitOk);
}

TEST_CASE("stages run one by one equal a full pipeline, and reruns are identical") {
  const auto dir = fixtures::temp_dir("compose");
  const auto cfg_path = write_config(dir, kSmallConfig);
  const auto err = dir / "err.txt";

  REQUIRE(cli("pipeline --config " + cfg_path.string() + " --out " + (dir / "full").string(), err) == kExitOk);
  for (const auto s : all_stages()) {
    const std::string name(to_string(s));
    INFO("stage " << name);
    REQUIRE(cli(name + " --config " + cfg_path.string() + " --out " + (dir / "staged").string(), err) == kExitOk);
  }
  const auto full = manifest_artifacts(dir / "full" / "manifest.json");
  const auto staged = manifest_artifacts(dir / "staged" / "manifest.json");
  CHECK(full.size() > 20);
  CHECK(full == staged);

  // Same config, different worker count.
  const auto cfg = parse_config(kSmallConfig, dir, ConfigOverrides{{}, 1, dir / "rerun"});
  std::ostringstream log;
  REQUIRE(run_pipeline(cfg, {}, log) == kExitOk);
  CHECK(manifest_artifacts(dir / "rerun" / "manifest.json") == full);

  const auto manifest = nlohmann::json::parse(slurp(dir / "full" / "manifest.json"));
  CHECK(manifest["format"] == "comfortsim-manifest-1");
  for (const auto s : all_stages()) CHECK(manifest["stages"][std::string(to_string(s))]["status"] == "ok");

  const auto metrics = nlohmann::json::parse(slurp(dir / "full" / "eval" / "metrics.json"));
  CHECK(metrics["config_digest"] == manifest["config_digest"]);
  // Every classifier on the primary split; the forest on the other one too.
  for (const auto& [mode, clf] : std::vector<std::pair<std::string, std::string>>{
           {"by_step", "random_forest"}, {"by_step", "decision_tree"}, {"by_step", "mlp"},
           {"by_dwelling", "random_forest"}}) {
    INFO(mode << " " << clf);
    REQUIRE(metrics["splits"][mode].contains(clf));
    const auto& m = metrics["splits"][mode][clf];
    CHECK(m["rows"].get<long>() > 0);
    CHECK(m["classes"]["discomfort"]["f1"].get<double>() >= 0);
  }
  CHECK(metrics["multihorizon"]["window"] == 4);

  // A different seed changes the outputs.
  REQUIRE(cli("pipeline --config " + cfg_path.string() + " --seed 4 --out " + (dir / "seed4").string(), err) ==
          kExitOk);
  CHECK(manifest_artifacts(dir / "seed4" / "manifest.json") != full);
}

TEST_CASE("ingest rejects outliers and records them") {
  const auto dir = fixtures::temp_dir("ingest");
  const auto cfg = small(dir / "out");
  std::ostringstream log;
  REQUIRE(run_pipeline(cfg, {Stage::Synth, Stage::Ingest}, log) == kExitOk);
  const auto clean = parse_survey((dir / "out" / "ingest" / "survey_clean.csv").string());
  const auto raw = parse_survey((dir / "out" / "synth" / "survey.csv").string());
  CHECK(clean.size() <= raw.size());
  CHECK(fs::exists(dir / "out" / "ingest" / "rejected.csv"));
  CHECK(fs::exists(dir / "out" / "ingest" / "iqr_bounds.json"));
}
