#include <cstdio>
#include <functional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "stylo/config.hpp"
#include "stylo/errors.hpp"
#include "stylo/pipeline.hpp"

namespace {

// exit codes: 0 ok, 2 usage, 3 config, 4 missing artifact, 5 runtime
enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kMissingArtifact = 4, kRuntime = 5 };

void print_error(const char* error_class, const std::string& message) {
  nlohmann::ordered_json j;
  j["error_class"] = error_class;
  j["message"] = message;
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stylo: style-vector behavioral cloning on a toy grid game"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "run";
  uint64_t seed = 0;
  bool seed_set = false;
  int trajectory_games = 0;

  app.add_option("--config", config_path, "run config JSON (defaults when omitted)");
  app.add_option("--out", out_dir, "run directory")->capture_default_str();
  app.add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });

  using Stage = std::function<std::string(const stylo::RunConfig&, const stylo::pipeline::RunPaths&)>;
  struct Command {
    const char* name;
    const char* help;
    Stage run;
  };
  const std::vector<Command> commands = {
      {"gen-population", "sample the synthetic player population and its partition",
       stylo::pipeline::gen_population},
      {"gen-data", "simulate games and build every player dataset",
       [&](const stylo::RunConfig& c, const stylo::pipeline::RunPaths& p) {
         return stylo::pipeline::gen_data(c, p, trajectory_games);
       }},
      {"train-base", "train the shared behavioral-cloning base model",
       stylo::pipeline::train_base_cmd},
      {"finetune", "fine-tune adapters and per-player routing rows",
       stylo::pipeline::finetune_cmd},
      {"fewshot", "fit reference style vectors for the few-shot players",
       stylo::pipeline::fewshot_cmd},
      {"stylometry", "seen and unseen player identification", stylo::pipeline::stylometry_cmd},
      {"consistency", "within- vs cross-player style vector consistency",
       stylo::pipeline::consistency_cmd},
      {"merge-check", "merged-dataset fits vs averaged style vectors",
       stylo::pipeline::merge_check_cmd},
      {"probe", "attribute profiles of every fine-tuned player model",
       stylo::pipeline::probe_cmd},
      {"steer", "style delta vectors and steering evaluation", stylo::pipeline::steer_cmd},
      {"interpolate", "win-rate curves between weak and strong players",
       stylo::pipeline::interpolate_cmd},
      {"report", "collect analysis CSVs and summaries into report/",
       stylo::pipeline::report_cmd},
  };
  for (const auto& cmd : commands) {
    app.add_subcommand(cmd.name, cmd.help)->fallthrough();
  }
  app.get_subcommand("gen-data")->add_option("--trajectories", trajectory_games,
                                             "also log this many raw match trajectories");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    print_error("usage", e.what());
    return kUsage;
  }

  try {
    stylo::RunConfig cfg =
        config_path.empty() ? stylo::default_run_config() : stylo::load_run_config(config_path);
    if (seed_set) cfg.seed = seed;
    cfg.validate();
    stylo::pipeline::RunPaths paths{out_dir};
    for (const auto& cmd : commands) {
      if (app.get_subcommand(cmd.name)->parsed()) {
        const std::string summary = cmd.run(cfg, paths);
        std::printf("%s\n", summary.c_str());
        return kOk;
      }
    }
    print_error("usage", "no command given");
    return kUsage;
  } catch (const stylo::MissingArtifactError& e) {
    print_error("missing_artifact", e.what());
    return kMissingArtifact;
  } catch (const stylo::ConfigError& e) {
    print_error("config", e.what());
    return kConfig;
  } catch (const stylo::ArgumentError& e) {
    print_error("config", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return kRuntime;
  }
}
