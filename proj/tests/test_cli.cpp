#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "stylo/config.hpp"
#include "stylo/serialize.hpp"

using namespace stylo;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STYLO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

// population and training sized to keep the whole CLI walk at seconds
RunConfig micro_config() {
  RunConfig cfg;
  cfg.seed = 17;
  cfg.threads = 2;
  cfg.population.n_players = 14;
  cfg.population.n_clusters = 2;
  cfg.partition.n_base = 12;
  cfg.partition.n_finetune = 4;
  cfg.partition.n_fewshot = 2;
  cfg.partition.n_seen_query = 2;
  cfg.games.games_lo = 10;
  cfg.games.games_hi = 12;
  cfg.games.reference_games = 10;
  cfg.games.query_games = 10;
  cfg.net.width = 16;
  cfg.net.blocks = 2;
  cfg.net.hidden = 32;
  cfg.net.rank = 2;
  cfg.net.modules = 4;
  cfg.net.heads = 2;
  cfg.train.epochs_base = 2;
  cfg.train.epochs_finetune = 2;
  cfg.train.epochs_fewshot = 4;
  cfg.analysis.probe_size = 128;
  cfg.analysis.lambdas = {0.0, 1.0};
  cfg.analysis.interp_pairs = 1;
  cfg.analysis.interp_games = 6;
  cfg.analysis.rr_players = 4;
  cfg.analysis.rr_games = 1;
  cfg.analysis.steer_threshold_std = -100.0;  // micro models barely differ; select everyone
  cfg.analysis.steer_players = 2;
  cfg.analysis.consistency_players = 2;
  cfg.analysis.consistency_splits = 2;
  cfg.analysis.merge_pairs = 1;
  cfg.analysis.unseen_distractors = 2;
  return cfg;
}

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CliRun {
  fs::path dir;
  std::string cfg_path;

  CliRun() : dir(fs::temp_directory_path() / "stylo_cli_run") {
    fs::remove_all(dir);
    fs::create_directories(dir);
    cfg_path = (dir / "config.json").string();
    save_run_config(cfg_path, micro_config());
  }
  std::string out(const std::string& name) const { return (dir / name).string(); }
  std::string flags(const std::string& name) const {
    return "--config " + cfg_path + " --out " + out(name);
  }
};

CliRun& cli_run() {
  static CliRun run;
  return run;
}

}  // namespace

TEST_CASE("unknown subcommands and flags exit with the usage code") {
  CHECK(run_cli("definitely-not-a-command") == 2);
  CHECK(run_cli("gen-population --no-such-flag") == 2);
}

TEST_CASE("malformed config exits with the config code") {
  CliRun& run = cli_run();
  const std::string bad = run.out("bad.json");
  std::ofstream f(bad);
  f << "{ nope";
  f.close();
  CHECK(run_cli("gen-population --config " + bad + " --out " + run.out("bad_run")) == 3);
}

TEST_CASE("analysis commands fail fast when upstream artifacts are missing") {
  CliRun& run = cli_run();
  CHECK(run_cli("stylometry " + run.flags("empty_run")) == 4);
  CHECK(run_cli("gen-data " + run.flags("empty_run2")) == 4);  // population missing
}

TEST_CASE("the full command walk succeeds on a micro run") {
  CliRun& run = cli_run();
  const std::string flags = run.flags("walk");
  CHECK(run_cli("gen-population " + flags) == 0);
  CHECK(run_cli("gen-data " + flags + " --trajectories 2") == 0);
  CHECK(run_cli("train-base " + flags) == 0);
  CHECK(run_cli("finetune " + flags) == 0);
  CHECK(run_cli("fewshot " + flags) == 0);
  CHECK(run_cli("stylometry " + flags) == 0);
  CHECK(run_cli("consistency " + flags) == 0);
  CHECK(run_cli("merge-check " + flags) == 0);
  CHECK(run_cli("probe " + flags) == 0);
  CHECK(run_cli("steer " + flags) == 0);
  CHECK(run_cli("interpolate " + flags) == 0);
  CHECK(run_cli("report " + flags) == 0);

  // report produced every analysis CSV named in the interfaces
  for (const char* name :
       {"consistency_cosines.csv", "merge_cosines.csv", "winrate_lambda.csv", "steering.csv",
        "roc_seen.csv", "roc_unseen.csv", "profiles.csv"}) {
    CHECK(fs::exists(fs::path(run.out("walk")) / "report" / name));
  }
  CHECK(fs::exists(fs::path(run.out("walk")) / "report" / "summary.json"));
  CHECK(fs::exists(fs::path(run.out("walk")) / "data" / "trajectories.csv"));
  for (const char* name :
       {"gen-population", "gen-data", "train-base", "finetune", "fewshot", "stylometry",
        "consistency", "merge-check", "probe", "steer", "interpolate", "report"}) {
    CHECK(fs::exists(fs::path(run.out("walk")) / "summaries" / (std::string(name) + ".json")));
  }
}

TEST_CASE("train-base twice with one config gives byte-identical checkpoints") {
  CliRun& run = cli_run();
  for (const char* name : {"det_a", "det_b"}) {
    const std::string flags = run.flags(name);
    REQUIRE(run_cli("gen-population " + flags) == 0);
    REQUIRE(run_cli("gen-data " + flags) == 0);
    REQUIRE(run_cli("train-base " + flags) == 0);
  }
  CHECK(slurp(run.out("det_a") + "/checkpoints/base.bin") ==
        slurp(run.out("det_b") + "/checkpoints/base.bin"));
  CHECK(slurp(run.out("det_a") + "/data/datasets.bin") ==
        slurp(run.out("det_b") + "/data/datasets.bin"));
}
