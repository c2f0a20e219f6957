// Command-line front end for the comfort simulation pipeline.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "comfort/pipeline.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string stage;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  bool print_config = false;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "JSON configuration file (defaults apply when omitted)");
  app->add_option("--out", o.out, "Output directory, overrides out_dir");
  app->add_option("--seed", o.seed, "Master seed, overrides seed");
  app->add_option("--workers", o.workers, "Worker threads, overrides workers")->check(CLI::PositiveNumber);
}

comfort::PipelineConfig make_config(const Options& o, CLI::App* app) {
  comfort::ConfigOverrides ov;
  if (app->count("--seed")) ov.seed = o.seed;
  if (app->count("--workers")) ov.workers = o.workers;
  if (!o.out.empty()) ov.out_dir = o.out;
  std::string text = "{}";
  std::filesystem::path base = std::filesystem::current_path();
  if (!o.config.empty()) {
    std::ifstream in(o.config, std::ios::binary);
    if (!in) throw comfort::ConfigError({"cannot open configuration file " + o.config});
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    base = std::filesystem::absolute(o.config).parent_path();
  }
  return comfort::parse_config(text, base, ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comfortsim: survey-driven thermal simulation, comfort labeling and classifier benchmark"};
  app.require_subcommand(1);
  Options o;

  struct Sub {
    CLI::App* app;
    std::vector<comfort::Stage> stages;
  };
  std::vector<Sub> subs;
  for (auto s : comfort::all_stages()) {
    const std::string name(comfort::to_string(s));
    auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
    add_common(sub, o);
    subs.push_back({sub, {s}});
  }
  auto* pipe = app.add_subcommand("pipeline", "Run every stage in order, or only --stage");
  add_common(pipe, o);
  pipe->add_option("--stage", o.stage, "Comma-separated subset of stages to run");
  subs.push_back({pipe, {}});
  auto* check = app.add_subcommand("check-config", "Validate a configuration and print it with defaults resolved");
  add_common(check, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : comfort::kExitConfigError;
  }

  try {
    if (*check) {
      const auto cfg = make_config(o, check);
      std::cout << comfort::config_to_json(cfg) << "digest " << comfort::config_digest(cfg) << "\n";
      return comfort::kExitOk;
    }
    for (auto& s : subs) {
      if (!*s.app) continue;
      const auto cfg = make_config(o, s.app);
      auto stages = s.stages;
      if (s.app == pipe && !o.stage.empty()) {
        std::stringstream ss(o.stage);
        std::string item;
        while (std::getline(ss, item, ',')) {
          try {
            stages.push_back(comfort::parse_stage(item));
          } catch (const comfort::Error& e) {
            throw comfort::ConfigError({std::string("--stage: ") + e.what()});
          }
        }
      }
      return comfort::run_pipeline(cfg, stages, std::cerr);
    }
  } catch (const comfort::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return comfort::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return comfort::kExitStageFailure;
  }
  return comfort::kExitOk;
}
