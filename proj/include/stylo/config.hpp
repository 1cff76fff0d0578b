#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylo/policy_net.hpp"
#include "stylo/population.hpp"
#include "stylo/trainer.hpp"

namespace stylo {

struct GameGenConfig {
  int games_lo = 20;   // per-player game counts, log-uniform
  int games_hi = 200;
  int reference_games = 100;  // few-shot enrollment set
  int query_games = 100;      // identification probe set
};

struct AnalysisConfig {
  int probe_size = 4096;
  std::vector<double> lambdas = {0.0, 0.25, 0.5, 0.75, 1.0};
  int interp_pairs = 10;
  int interp_games = 200;
  int rr_players = 24;        // round-robin pool for strength ranking
  int rr_games = 2;           // per pairing
  double match_temperature = 1.0;
  double steer_threshold_std = 1.5;
  int steer_players = 32;
  double steer_strength = 1.0;
  std::vector<std::string> steer_attributes = {"aggression", "kick_rate"};
  int consistency_players = 16;
  int consistency_splits = 4;
  int merge_pairs = 20;
  int unseen_distractors = 48;  // fine-tuning rows added to the unseen universe
};

struct RunConfig {
  uint64_t seed = 7;
  int threads = 2;
  PopulationConfig population;
  PartitionConfig partition;
  GameGenConfig games;
  NetConfig net;
  TrainConfig train;
  AnalysisConfig analysis;

  void validate() const;
};

RunConfig default_run_config();
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

}  // namespace stylo
