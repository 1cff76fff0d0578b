#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stylo/adapters.hpp"
#include "stylo/population.hpp"
#include "stylo/trainer.hpp"

namespace stylo {

uint64_t fnv1a64(const void* data, size_t n);

// Checkpoints are a human-readable JSON manifest (net config, tensor index,
// routing player-id table, blob hash) next to a blob of little-endian raw
// 32-bit floats. load(save(x)) is bit-identical.
void save_checkpoint(const std::string& prefix, const TrainedModel& model,
                     const std::vector<int>* routing_player_ids = nullptr);

struct LoadedCheckpoint {
  TrainedModel model;
  RoutingTensor routing;
  bool has_routing = false;
};

LoadedCheckpoint load_checkpoint(const std::string& prefix);

// All datasets of a run, addressable by player id.
struct DataBundle {
  std::vector<PlayerDataset> main;       // base players (fine-tuning is a subset)
  std::vector<PlayerDataset> reference;  // few-shot players, 100-game reference sets
  std::vector<PlayerDataset> query;      // few-shot and seen-query players

  static const PlayerDataset& find(const std::vector<PlayerDataset>& set, int player_id);
};

void save_datasets(const std::string& prefix, const DataBundle& bundle);
DataBundle load_datasets(const std::string& prefix);

void save_style_vectors(const std::string& prefix, const std::vector<StyleVector>& vectors);
std::vector<StyleVector> load_style_vectors(const std::string& prefix);

// One CSV row per ply: game, ply, side, raw cells, absolute action index.
void write_trajectories(const std::string& path, const std::vector<MatchResult>& matches);

bool file_exists(const std::string& path);
void require_artifact(const std::string& path, const std::string& produced_by);

}  // namespace stylo
