#include <set>

#include <doctest.h>

#include "stylo/population.hpp"

using namespace stylo;

namespace {

PopulationConfig small_pop() {
  PopulationConfig cfg;
  cfg.n_players = 12;
  cfg.n_clusters = 3;
  return cfg;
}

}  // namespace

TEST_CASE("single cluster with zero perturbation collapses to one style") {
  PopulationConfig cfg = small_pop();
  cfg.n_clusters = 1;
  cfg.player_sigma = 0.0;
  const auto pop = sample_population(cfg, RngStream(1));
  for (const auto& spec : pop) {
    CHECK(spec.params.chase_weight == pop[0].params.chase_weight);
    CHECK(spec.params.goal_push_weight == pop[0].params.goal_push_weight);
    CHECK(spec.params.defend_weight == pop[0].params.defend_weight);
    CHECK(spec.params.kick_bias == pop[0].params.kick_bias);
    CHECK(spec.cluster == 0);
  }
}

TEST_CASE("population sampling is seed deterministic") {
  const auto a = sample_population(small_pop(), RngStream(7));
  const auto b = sample_population(small_pop(), RngStream(7));
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].params.chase_weight == b[i].params.chase_weight);
    CHECK(a[i].params.temperature == b[i].params.temperature);
    CHECK(a[i].cluster == b[i].cluster);
  }
}

TEST_CASE("positive perturbation keeps players distinct") {
  PopulationConfig cfg = small_pop();
  cfg.n_players = 64;
  const auto pop = sample_population(cfg, RngStream(3));
  std::set<std::tuple<float, float, float, float>> seen;
  for (const auto& spec : pop) {
    seen.insert({spec.params.chase_weight, spec.params.goal_push_weight,
                 spec.params.defend_weight, spec.params.kick_bias});
  }
  CHECK(seen.size() == pop.size());
  for (const auto& spec : pop) CHECK(spec.params.temperature > 0.0f);
}

TEST_CASE("ten games split 8/1/1") {
  const auto pop = sample_population(small_pop(), RngStream(4));
  const PlayerDataset ds = generate_games(pop[0], {pop.begin() + 1, pop.end()}, 10, RngStream(5));
  CHECK(ds.n_games() == 10);
  CHECK(ds.train_games == 8);
  CHECK(ds.test_games == 1);
  CHECK(ds.val_games == 1);
  const auto [tr0, tr1] = ds.game_range(Split::Train);
  const auto [te0, te1] = ds.game_range(Split::Test);
  const auto [va0, va1] = ds.game_range(Split::Val);
  CHECK(tr0 == 0);
  CHECK(tr1 == te0);
  CHECK(te1 == va0);
  CHECK(va1 == ds.n_games());
}

TEST_CASE("fewer than ten games is an argument error") {
  const auto pop = sample_population(small_pop(), RngStream(4));
  CHECK_THROWS_AS(generate_games(pop[0], {pop.begin() + 1, pop.end()}, 9, RngStream(5)),
                  ArgumentError);
}

TEST_CASE("all recorded actions were legal in their recorded states") {
  // regenerate the focal player's games and replay them move by move
  const auto pop = sample_population(small_pop(), RngStream(6));
  const PlayerSpec& focal = pop[2];
  std::vector<PlayerSpec> opponents;
  for (const auto& spec : pop) {
    if (spec.id != focal.id) opponents.push_back(spec);
  }
  RngStream gen(77);
  const Policy focal_policy = [&](const GameState& s) {
    return scripted_policy(focal.params, s);
  };
  for (int g = 0; g < 12; ++g) {
    const PlayerSpec& opp = opponents[static_cast<size_t>(g) % opponents.size()];
    const Policy opp_policy = [&](const GameState& s) { return scripted_policy(opp.params, s); };
    const Side focal_side = g % 2 == 0 ? Side::L : Side::R;
    const MatchResult match =
        focal_side == Side::L
            ? play_match(focal_policy, opp_policy, gen.stream("game", static_cast<uint64_t>(g)))
            : play_match(opp_policy, focal_policy, gen.stream("game", static_cast<uint64_t>(g)));
    for (const PlyRecord& rec : match.trajectory) {
      CHECK(is_legal(rec.state, rec.action));
    }
  }
  // and the dataset rows carry in-range frame actions
  const PlayerDataset ds = generate_games(focal, opponents, 12, RngStream(88));
  for (const uint8_t a : ds.actions) CHECK(a < kNumActions);
  CHECK(ds.rows() > 0);
  CHECK(ds.features.all_finite());
}

TEST_CASE("game generation is seed deterministic") {
  const auto pop = sample_population(small_pop(), RngStream(6));
  std::vector<PlayerSpec> opponents(pop.begin() + 1, pop.end());
  const PlayerDataset a = generate_games(pop[0], opponents, 15, RngStream(42));
  const PlayerDataset b = generate_games(pop[0], opponents, 15, RngStream(42));
  CHECK(a.features.data == b.features.data);
  CHECK(a.actions == b.actions);
  CHECK(a.game_row_begin == b.game_row_begin);
}

TEST_CASE("every split of every generated dataset is nonempty") {
  const auto pop = sample_population(small_pop(), RngStream(8));
  std::vector<PlayerSpec> opponents(pop.begin() + 1, pop.end());
  for (const int n : {10, 23, 57}) {
    const PlayerDataset ds = generate_games(pop[0], opponents, n, RngStream(9));
    for (const Split split : {Split::Train, Split::Test, Split::Val}) {
      const auto [r0, r1] = ds.row_range(split);
      CHECK(r1 > r0);
    }
  }
}

TEST_CASE("partition sets are disjoint where required and sized as configured") {
  PopulationConfig pcfg = small_pop();
  pcfg.n_players = 40;
  const auto pop = sample_population(pcfg, RngStream(10));
  PartitionConfig cfg;
  cfg.n_base = 32;
  cfg.n_finetune = 12;
  cfg.n_fewshot = 6;
  cfg.n_seen_query = 5;
  const PopulationPartition part = make_partition(pop, cfg, RngStream(11));
  CHECK(part.base_ids.size() == 32);
  CHECK(part.finetune_ids.size() == 12);
  CHECK(part.fewshot_ids.size() == 6);
  CHECK(part.seen_query_ids.size() == 5);
  const std::set<int> base(part.base_ids.begin(), part.base_ids.end());
  for (const int id : part.finetune_ids) CHECK(base.count(id) == 1);
  for (const int id : part.fewshot_ids) CHECK(base.count(id) == 0);
  const std::set<int> finetune(part.finetune_ids.begin(), part.finetune_ids.end());
  for (const int id : part.fewshot_ids) CHECK(finetune.count(id) == 0);
  for (const int id : part.seen_query_ids) CHECK(finetune.count(id) == 1);
}

TEST_CASE("partition rejects an undersized population") {
  const auto pop = sample_population(small_pop(), RngStream(12));
  PartitionConfig cfg;
  cfg.n_base = 10;
  cfg.n_finetune = 4;
  cfg.n_fewshot = 6;  // 10 + 6 > 12 players
  CHECK_THROWS_AS(make_partition(pop, cfg, RngStream(13)), ConfigError);
}

TEST_CASE("desk-scale partition defaults fit the default population") {
  PopulationConfig pcfg;  // 272 players
  PartitionConfig cfg;    // 256 / 64 / 16 / 32
  const auto pop = sample_population(pcfg, RngStream(14));
  const PopulationPartition part = make_partition(pop, cfg, RngStream(15));
  CHECK(part.base_ids.size() == 256);
  CHECK(part.finetune_ids.size() == 64);
  CHECK(part.fewshot_ids.size() == 16);
  CHECK(part.seen_query_ids.size() == 32);
}
