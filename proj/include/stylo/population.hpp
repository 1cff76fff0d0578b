#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylo/gridsoccer.hpp"
#include "stylo/rng.hpp"
#include "stylo/tensor.hpp"

namespace stylo {

// Ground-truth player. StyleParams are visible to the generator and the
// evaluators only; trainers receive datasets and never see them.
struct PlayerSpec {
  int id = -1;
  StyleParams params;
  int cluster = -1;
};

struct PopulationConfig {
  int n_players = 272;
  int n_clusters = 6;
  // The first four clusters each specialize in one style axis: the dominant
  // weight draws from the specialist range, the rest from the background
  // range; remaining clusters are generalists. One specialist per axis gives
  // each measured attribute a genuine >1.5-std upper tail and keeps clusters
  // separable in style space. The push floor and the temperature range keep
  // scripted play lively enough that most games end before the ply cap.
  double chase_lo = 0.0, chase_hi = 0.6;
  double chase_spec_lo = 2.0, chase_spec_hi = 3.0;
  double push_lo = 0.2, push_hi = 0.8;
  double push_spec_lo = 1.2, push_spec_hi = 1.8;
  double defend_lo = 0.0, defend_hi = 0.6;
  double defend_spec_lo = 1.2, defend_spec_hi = 1.8;
  double kick_lo = -0.5, kick_hi = 0.2;
  double kick_spec_lo = 0.9, kick_spec_hi = 1.4;
  double min_center_dist = 0.8;  // rejection-sampled pairwise separation
  double player_sigma = 0.2;     // per-player perturbation around the center
  double temp_lo = 0.4, temp_hi = 1.1;
};

std::vector<PlayerSpec> sample_population(const PopulationConfig& cfg, RngStream rng);

enum class Split { Train, Test, Val };

// One player's encoded (state, action) rows grouped by game, with the
// 80/10/10 train/test/val split applied over whole games.
struct PlayerDataset {
  int player_id = -1;
  Tensor features;                 // [rows x kFeatureDim]
  std::vector<uint8_t> actions;    // frame-relative action indices
  std::vector<int> game_row_begin; // size n_games + 1
  int train_games = 0, test_games = 0, val_games = 0;

  int n_games() const { return static_cast<int>(game_row_begin.size()) - 1; }
  int rows() const { return game_row_begin.empty() ? 0 : game_row_begin.back(); }

  // contiguous game range of a split: [first, last)
  std::pair<int, int> game_range(Split split) const;
  std::pair<int, int> row_range(Split split) const;

  // rows [begin, end) as a batchable pair
  Tensor rows_features(int row_begin, int row_end) const;
  std::vector<int> rows_actions(int row_begin, int row_end) const;

  Tensor split_features(Split split) const;
  std::vector<int> split_actions(Split split) const;
};

// 80/10/10 by game count; test and val get at least one game each.
void assign_split(PlayerDataset& ds);

// Plays n_games against rotating opponents (focal side alternates per game)
// and records only the focal player's (encoded state, frame action) pairs.
PlayerDataset generate_games(const PlayerSpec& spec, const std::vector<PlayerSpec>& opponents,
                             int n_games, RngStream rng);

struct PartitionConfig {
  int n_base = 256;
  int n_finetune = 64;     // subset of the base set
  int n_fewshot = 16;      // held out of base and fine-tuning sets
  int n_seen_query = 32;   // fine-tuning players that also get a query set
};

struct PopulationPartition {
  std::vector<int> base_ids;
  std::vector<int> finetune_ids;  // row order of the routing tensor
  std::vector<int> fewshot_ids;
  std::vector<int> seen_query_ids;
};

PopulationPartition make_partition(const std::vector<PlayerSpec>& population,
                                   const PartitionConfig& cfg, RngStream rng);

}  // namespace stylo
