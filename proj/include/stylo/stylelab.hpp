#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stylo/adapters.hpp"
#include "stylo/gridsoccer.hpp"
#include "stylo/trainer.hpp"

namespace stylo {

double cosine_similarity(const Tensor& u, const Tensor& v);
double cosine_similarity(const StyleVector& u, const StyleVector& v);

struct StylometryResult {
  std::vector<int> query_ids;
  std::vector<int> predicted_ids;
  std::vector<int> rank_of_true;             // 1-based; 0 if the true id is absent
  std::vector<std::vector<double>> scores;   // per query, cosine to each universe row
  double top1 = 0.0;
  std::vector<std::pair<double, double>> roc;  // (fpr, tpr), anchored at (0,0) and (1,1)
};

// Ranks every universe row by cosine to each query vector; ties break toward
// the lower player id. ROC sweeps a similarity threshold over all
// (query, row) pairs with "correct player" as the positive label.
StylometryResult stylometry_identify(const std::vector<StyleVector>& queries,
                                     const RoutingTensor& universe);

struct ConsistencyResult {
  std::vector<double> within;  // same-player pairs across disjoint splits
  std::vector<double> cross;   // different-player pairs
  double mean_within = 0.0;
  double mean_cross = 0.0;
  double p_value = 1.0;  // one-sided rank-sum: within > cross
};

// Fits one style vector per disjoint split of each player's games and
// compares within-player to cross-player cosine similarity.
ConsistencyResult consistency_within(const TrainedModel& model,
                                     const std::vector<const PlayerDataset*>& players, int splits,
                                     const TrainConfig& cfg, RngStream rng, int threads = 1);

struct MergeResult {
  int player_a = -1;
  int player_b = -1;
  double cos_to_average = 0.0;  // cos(fit(merged), (za + zb) / 2)
  double cos_to_random = 0.0;   // cos(fit(merged), one random population row)
};

// Fits a vector on the two players' merged games (equal game counts from
// each, canonical order) and compares it to the logit-space average of their
// rows and to a random population row.
MergeResult merge_consistency(const TrainedModel& model, const PlayerDataset& da,
                              const PlayerDataset& db, const StyleVector& za,
                              const StyleVector& zb, const RoutingTensor& population,
                              const TrainConfig& cfg, RngStream rng);

struct StyleDelta {
  Tensor delta;  // [m x h]
  std::string attribute;
  int source_count = 0;
};

// Mean style vector of the selected players minus the population mean, in
// routing-logit space.
StyleDelta style_delta(const std::vector<const Tensor*>& top_players,
                       const std::vector<const Tensor*>& population);

StyleVector steer(const StyleVector& style, const StyleDelta& delta, double strength);

// Players whose attribute exceeds mean + threshold_std * std over the given
// profiles. Errors when the selection is empty.
std::vector<int> select_top_attribute_players(const std::vector<int>& player_ids,
                                              const std::vector<AttributeProfile>& profiles,
                                              const std::string& attribute, double threshold_std);

// Attribute profile of the conditioned model: per-state expectation under its
// masked action distribution at temperature 1.
AttributeProfile probe_model_attributes(const TrainedModel& model, const Tensor& style,
                                        const std::vector<GameState>& probe_set);

// Win rate of the (1-lambda) u_w + lambda u_s player against the u_s player,
// one entry per lambda; sides alternate per game and draws count 0.5.
std::vector<double> interpolate_winrate(const TrainedModel& model, const Tensor& weak,
                                        const Tensor& strong, const std::vector<double>& lambdas,
                                        int n_games, double temperature, RngStream rng,
                                        int threads = 1);

// Round-robin win rate of each conditioned player against the others.
std::vector<double> round_robin_strength(const TrainedModel& model,
                                         const std::vector<const Tensor*>& styles,
                                         int games_per_pair, double temperature, RngStream rng,
                                         int threads = 1);

}  // namespace stylo
