#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "stylo/config.hpp"
#include "stylo/serialize.hpp"
#include "tiny_run.hpp"

using namespace stylo;
using namespace stylo::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf) const { return (path / leaf).string(); }
};

std::vector<uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round trip is bit identical, including routing rows") {
  const TinyRun& run = tiny_run();
  TempDir dir("stylo_ckpt_test");
  std::vector<int> ids;
  for (const auto& row : run.routing.rows) ids.push_back(row.player_id);
  save_checkpoint(dir.str("model"), run.finetuned, &ids);

  const LoadedCheckpoint loaded = load_checkpoint(dir.str("model"));
  CHECK(loaded.model.store.snapshot() == run.finetuned.store.snapshot());
  REQUIRE(loaded.has_routing);
  REQUIRE(loaded.routing.size() == run.routing.size());
  for (int i = 0; i < loaded.routing.size(); ++i) {
    CHECK(loaded.routing.rows[static_cast<size_t>(i)].player_id ==
          run.routing.rows[static_cast<size_t>(i)].player_id);
    CHECK(loaded.routing.rows[static_cast<size_t>(i)].logits.data ==
          run.routing.rows[static_cast<size_t>(i)].logits.data);
  }

  // saving the loaded model reproduces both files byte for byte
  save_checkpoint(dir.str("model2"), loaded.model, &ids);
  CHECK(slurp(dir.str("model.bin")) == slurp(dir.str("model2.bin")));
  CHECK(slurp(dir.str("model.json")) == slurp(dir.str("model2.json")));
}

TEST_CASE("checkpoint blob corruption is detected") {
  const TinyRun& run = tiny_run();
  TempDir dir("stylo_ckpt_corrupt");
  save_checkpoint(dir.str("model"), run.base);
  auto blob = slurp(dir.str("model.bin"));
  blob[blob.size() / 2] ^= 0xff;
  std::ofstream out(dir.str("model.bin"), std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
  out.close();
  CHECK_THROWS_AS(load_checkpoint(dir.str("model")), ConfigError);
}

TEST_CASE("missing checkpoint raises a missing-artifact error") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/prefix"), MissingArtifactError);
}

TEST_CASE("dataset bundle round trip preserves every field") {
  const TinyRun& run = tiny_run();
  TempDir dir("stylo_data_test");
  DataBundle bundle;
  bundle.main = {run.datasets[0], run.datasets[1]};
  bundle.reference = {run.datasets[2]};
  bundle.query = {run.datasets[3]};
  save_datasets(dir.str("datasets"), bundle);
  const DataBundle loaded = load_datasets(dir.str("datasets"));
  REQUIRE(loaded.main.size() == 2);
  REQUIRE(loaded.reference.size() == 1);
  REQUIRE(loaded.query.size() == 1);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(loaded.main[i].player_id == bundle.main[i].player_id);
    CHECK(loaded.main[i].features.data == bundle.main[i].features.data);
    CHECK(loaded.main[i].actions == bundle.main[i].actions);
    CHECK(loaded.main[i].game_row_begin == bundle.main[i].game_row_begin);
    CHECK(loaded.main[i].train_games == bundle.main[i].train_games);
  }
  CHECK_THROWS_AS(DataBundle::find(loaded.main, 424242), MissingArtifactError);
}

TEST_CASE("style vector table round trip") {
  const TinyRun& run = tiny_run();
  TempDir dir("stylo_vec_test");
  std::vector<StyleVector> vectors = {run.routing.rows[0], run.routing.rows[5]};
  save_style_vectors(dir.str("vectors"), vectors);
  const auto loaded = load_style_vectors(dir.str("vectors"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].player_id == vectors[0].player_id);
  CHECK(loaded[0].logits.data == vectors[0].logits.data);
  CHECK(loaded[1].logits.data == vectors[1].logits.data);
}

TEST_CASE("trajectory log carries one row per ply") {
  TempDir dir("stylo_traj_test");
  StyleParams params;
  params.chase_weight = 2.0f;
  params.goal_push_weight = 2.0f;
  params.kick_bias = 1.0f;
  params.temperature = 0.4f;
  const Policy p = [&](const GameState& s) { return scripted_policy(params, s); };
  const MatchResult match = play_match(p, p, 3);
  write_trajectories(dir.str("traj.csv"), {match});
  std::ifstream in(dir.str("traj.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == static_cast<int>(match.trajectory.size()) + 1);  // header + plies
}

TEST_CASE("run config JSON round trips and validates") {
  TempDir dir("stylo_cfg_test");
  RunConfig cfg = default_run_config();
  cfg.seed = 1234;
  cfg.population.n_players = 100;
  cfg.partition.n_base = 80;
  cfg.partition.n_finetune = 20;
  cfg.partition.n_fewshot = 8;
  cfg.partition.n_seen_query = 10;
  cfg.train.lr_routing = 0.5f;
  save_run_config(dir.str("config.json"), cfg);
  const RunConfig loaded = load_run_config(dir.str("config.json"));
  CHECK(loaded.seed == 1234);
  CHECK(loaded.population.n_players == 100);
  CHECK(loaded.train.lr_routing == 0.5f);
  CHECK(loaded.analysis.lambdas == cfg.analysis.lambdas);

  // unknown files and malformed JSON map to the right error classes
  CHECK_THROWS_AS(load_run_config(dir.str("nope.json")), MissingArtifactError);
  std::ofstream bad(dir.str("bad.json"));
  bad << "{ not json";
  bad.close();
  CHECK_THROWS_AS(load_run_config(dir.str("bad.json")), ConfigError);

  RunConfig invalid = default_run_config();
  invalid.games.games_lo = 5;  // splits degenerate below 10 games
  CHECK_THROWS_AS(invalid.validate(), ConfigError);
}
