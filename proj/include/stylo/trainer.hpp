#pragma once

#include <map>
#include <string>
#include <vector>

#include "stylo/adapters.hpp"
#include "stylo/param_store.hpp"
#include "stylo/policy_net.hpp"
#include "stylo/population.hpp"

namespace stylo {

struct TrainConfig {
  int epochs_base = 20;
  int epochs_finetune = 30;
  int epochs_fewshot = 50;
  int batch = 256;
  float lr_base = 1e-3f;
  float lr_adapter = 1e-3f;
  float lr_routing = 1e-2f;  // two-speed: routing learns faster than adapters
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  int patience = 5;  // early stopping on validation loss
  double routing_init_sigma = 0.01;

  std::map<Group, float> lr_by_group() const {
    return {{Group::Base, lr_base}, {Group::Adapter, lr_adapter}, {Group::Routing, lr_routing}};
  }

  AdamConfig<float> adam() const { return {beta1, beta2, eps}; }
};

// A network together with the store that owns its parameters.
struct TrainedModel {
  NetConfig net_cfg;
  ParamStore store;
  PolicyNet net;

  TrainedModel() = default;
  TrainedModel(const NetConfig& cfg, uint64_t init_seed);

  TrainedModel(const TrainedModel& other);
  TrainedModel& operator=(const TrainedModel& other);
  TrainedModel(TrainedModel&&) = default;
  TrainedModel& operator=(TrainedModel&&) = default;
};

struct CurvePoint {
  int epoch;
  std::string split;
  double loss;
  double accuracy;
};

// Trains the base model (input projection, block base weights, action head)
// on the union of the base players' train partitions. Adapter shifts stay
// zero throughout.
TrainedModel train_base(const std::vector<const PlayerDataset*>& datasets,
                        const NetConfig& net_cfg, const TrainConfig& cfg, uint64_t seed,
                        std::vector<CurvePoint>* curve = nullptr,
                        std::vector<std::string>* warnings = nullptr);

// Freezes the base model and fine-tunes adapters plus one routing row per
// player, with the two-speed learning rates. Rows are ordered like
// `datasets`. The model's store gains a "routing.Z" parameter.
RoutingTensor finetune_mhr(TrainedModel& model,
                           const std::vector<const PlayerDataset*>& datasets,
                           const TrainConfig& cfg, uint64_t seed,
                           std::vector<CurvePoint>* curve = nullptr,
                           std::vector<std::string>* warnings = nullptr);

// Routing-only few-shot fit of a fresh style vector on the given rows. The
// model is read but never written, so concurrent fits against one model are
// safe.
StyleVector fewshot_fit(const TrainedModel& model, const Tensor& features,
                        const std::vector<int>& actions, const TrainConfig& cfg, RngStream rng,
                        int player_id);

StyleVector fewshot_fit(const TrainedModel& model, const PlayerDataset& reference,
                        const TrainConfig& cfg, RngStream rng);

struct EvalRow {
  int player_id;
  double accuracy;
};

struct EvalTable {
  std::vector<EvalRow> rows;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Per-player move-matching accuracy on a split, plus the unweighted mean.
// style_of(player_id) returns the conditioning vector, or nullptr for the
// bare base model.
EvalTable eval_per_player(const TrainedModel& model, const RoutingTensor& routing,
                          const std::vector<const PlayerDataset*>& datasets, Split split);

EvalTable eval_per_player_base(const TrainedModel& model,
                               const std::vector<const PlayerDataset*>& datasets, Split split);

}  // namespace stylo
