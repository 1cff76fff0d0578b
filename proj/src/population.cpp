#include "stylo/population.hpp"

#include <algorithm>
#include <cmath>

#include "stylo/errors.hpp"

namespace stylo {

namespace {

double center_dist(const StyleParams& a, const StyleParams& b) {
  const double d0 = a.chase_weight - b.chase_weight;
  const double d1 = a.goal_push_weight - b.goal_push_weight;
  const double d2 = a.defend_weight - b.defend_weight;
  const double d3 = a.kick_bias - b.kick_bias;
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3);
}

}  // namespace

std::vector<PlayerSpec> sample_population(const PopulationConfig& cfg, RngStream rng) {
  if (cfg.n_players < cfg.n_clusters || cfg.n_clusters < 1) {
    throw ConfigError("population: need n_players >= n_clusters >= 1");
  }
  RngStream centers_rng = rng.stream("centers");
  std::vector<StyleParams> centers;
  int attempts = 0;
  while (static_cast<int>(centers.size()) < cfg.n_clusters) {
    // first four clusters specialize in one axis each; the rest are generalists
    const int index = static_cast<int>(centers.size());
    const int axis = index < 4 ? index : -1;
    StyleParams c;
    c.chase_weight = static_cast<float>(
        axis == 0 ? centers_rng.uniform(cfg.chase_spec_lo, cfg.chase_spec_hi)
                  : centers_rng.uniform(cfg.chase_lo, cfg.chase_hi));
    c.goal_push_weight = static_cast<float>(
        axis == 1 ? centers_rng.uniform(cfg.push_spec_lo, cfg.push_spec_hi)
                  : centers_rng.uniform(cfg.push_lo, cfg.push_hi));
    c.defend_weight = static_cast<float>(
        axis == 2 ? centers_rng.uniform(cfg.defend_spec_lo, cfg.defend_spec_hi)
                  : centers_rng.uniform(cfg.defend_lo, cfg.defend_hi));
    c.kick_bias = static_cast<float>(
        axis == 3 ? centers_rng.uniform(cfg.kick_spec_lo, cfg.kick_spec_hi)
                  : centers_rng.uniform(cfg.kick_lo, cfg.kick_hi));
    bool ok = true;
    for (const auto& prev : centers) {
      if (center_dist(prev, c) < cfg.min_center_dist) {
        ok = false;
        break;
      }
    }
    // relax the separation constraint if the ranges cannot fit the clusters
    if (ok || ++attempts > 10000) centers.push_back(c);
  }
  RngStream players_rng = rng.stream("players");
  std::vector<PlayerSpec> population;
  population.reserve(static_cast<size_t>(cfg.n_players));
  for (int i = 0; i < cfg.n_players; ++i) {
    PlayerSpec spec;
    spec.id = i;
    spec.cluster = i % cfg.n_clusters;
    const StyleParams& c = centers[static_cast<size_t>(spec.cluster)];
    RngStream prng = players_rng.stream("player", static_cast<uint64_t>(i));
    spec.params.chase_weight =
        static_cast<float>(c.chase_weight + prng.gaussian(0.0, cfg.player_sigma));
    spec.params.goal_push_weight =
        static_cast<float>(c.goal_push_weight + prng.gaussian(0.0, cfg.player_sigma));
    spec.params.defend_weight =
        static_cast<float>(c.defend_weight + prng.gaussian(0.0, cfg.player_sigma));
    spec.params.kick_bias = static_cast<float>(c.kick_bias + prng.gaussian(0.0, cfg.player_sigma));
    spec.params.temperature = static_cast<float>(prng.log_uniform(cfg.temp_lo, cfg.temp_hi));
    population.push_back(spec);
  }
  return population;
}

std::pair<int, int> PlayerDataset::game_range(Split split) const {
  switch (split) {
    case Split::Train: return {0, train_games};
    case Split::Test: return {train_games, train_games + test_games};
    case Split::Val: return {train_games + test_games, train_games + test_games + val_games};
  }
  return {0, 0};
}

std::pair<int, int> PlayerDataset::row_range(Split split) const {
  const auto [g0, g1] = game_range(split);
  return {game_row_begin[static_cast<size_t>(g0)], game_row_begin[static_cast<size_t>(g1)]};
}

Tensor PlayerDataset::rows_features(int row_begin, int row_end) const {
  const int n = row_end - row_begin;
  Tensor out({n, kFeatureDim});
  std::copy(features.row(row_begin), features.row(row_begin) + static_cast<size_t>(n) * kFeatureDim,
            out.data.begin());
  return out;
}

std::vector<int> PlayerDataset::rows_actions(int row_begin, int row_end) const {
  std::vector<int> out;
  out.reserve(static_cast<size_t>(row_end - row_begin));
  for (int i = row_begin; i < row_end; ++i) out.push_back(actions[static_cast<size_t>(i)]);
  return out;
}

Tensor PlayerDataset::split_features(Split split) const {
  const auto [r0, r1] = row_range(split);
  return rows_features(r0, r1);
}

std::vector<int> PlayerDataset::split_actions(Split split) const {
  const auto [r0, r1] = row_range(split);
  return rows_actions(r0, r1);
}

void assign_split(PlayerDataset& ds) {
  const int n = ds.n_games();
  if (n < 10) throw ArgumentError("dataset split needs at least 10 games, got " + std::to_string(n));
  ds.test_games = std::max(1, static_cast<int>(std::lround(n * 0.1)));
  ds.val_games = std::max(1, static_cast<int>(std::lround(n * 0.1)));
  ds.train_games = n - ds.test_games - ds.val_games;
}

PlayerDataset generate_games(const PlayerSpec& spec, const std::vector<PlayerSpec>& opponents,
                             int n_games, RngStream rng) {
  if (n_games < 10) throw ArgumentError("generate_games: need at least 10 games");
  if (opponents.empty()) throw ArgumentError("generate_games: no opponents");
  PlayerDataset ds;
  ds.player_id = spec.id;
  std::vector<float> feats;
  ds.game_row_begin.push_back(0);
  const Policy focal_policy = [&spec](const GameState& s) {
    return scripted_policy(spec.params, s);
  };
  for (int g = 0; g < n_games; ++g) {
    const PlayerSpec& opp = opponents[static_cast<size_t>(g) % opponents.size()];
    const Policy opp_policy = [&opp](const GameState& s) {
      return scripted_policy(opp.params, s);
    };
    const Side focal_side = g % 2 == 0 ? Side::L : Side::R;
    const MatchResult match =
        focal_side == Side::L
            ? play_match(focal_policy, opp_policy, rng.stream("game", static_cast<uint64_t>(g)))
            : play_match(opp_policy, focal_policy, rng.stream("game", static_cast<uint64_t>(g)));
    for (const PlyRecord& rec : match.trajectory) {
      if (rec.side != focal_side) continue;
      const auto f = encode_state(rec.state, focal_side);
      feats.insert(feats.end(), f.begin(), f.end());
      ds.actions.push_back(static_cast<uint8_t>(to_frame_action(rec.action, focal_side)));
    }
    ds.game_row_begin.push_back(static_cast<int>(ds.actions.size()));
  }
  ds.features = Tensor({static_cast<int>(ds.actions.size()), kFeatureDim}, std::move(feats));
  assign_split(ds);
  return ds;
}

PopulationPartition make_partition(const std::vector<PlayerSpec>& population,
                                   const PartitionConfig& cfg, RngStream rng) {
  const int n = static_cast<int>(population.size());
  if (cfg.n_finetune > cfg.n_base || cfg.n_seen_query > cfg.n_finetune) {
    throw ConfigError("partition: need n_seen_query <= n_finetune <= n_base");
  }
  if (cfg.n_base + cfg.n_fewshot > n) {
    throw ConfigError("partition: population of " + std::to_string(n) +
                      " too small for base " + std::to_string(cfg.n_base) + " + few-shot " +
                      std::to_string(cfg.n_fewshot));
  }
  std::vector<int> ids;
  for (const auto& spec : population) ids.push_back(spec.id);
  RngStream shuffle_rng = rng.stream("partition");
  shuffle_rng.shuffle(ids);
  PopulationPartition part;
  part.base_ids.assign(ids.begin(), ids.begin() + cfg.n_base);
  part.fewshot_ids.assign(ids.begin() + cfg.n_base, ids.begin() + cfg.n_base + cfg.n_fewshot);
  part.finetune_ids.assign(part.base_ids.begin(), part.base_ids.begin() + cfg.n_finetune);
  part.seen_query_ids.assign(part.finetune_ids.begin(),
                             part.finetune_ids.begin() + cfg.n_seen_query);
  std::sort(part.base_ids.begin(), part.base_ids.end());
  std::sort(part.finetune_ids.begin(), part.finetune_ids.end());
  std::sort(part.fewshot_ids.begin(), part.fewshot_ids.end());
  std::sort(part.seen_query_ids.begin(), part.seen_query_ids.end());
  return part;
}

}  // namespace stylo
