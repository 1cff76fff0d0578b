#include "stylo/stylelab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stylo/parallel.hpp"
#include "stylo/stats.hpp"

namespace stylo {

double cosine_similarity(const Tensor& u, const Tensor& v) {
  if (u.numel() != v.numel() || u.numel() == 0) {
    throw DimensionError("cosine_similarity: dimension mismatch");
  }
  double dot = 0, nu = 0, nv = 0;
  for (size_t i = 0; i < u.data.size(); ++i) {
    dot += static_cast<double>(u.data[i]) * v.data[i];
    nu += static_cast<double>(u.data[i]) * u.data[i];
    nv += static_cast<double>(v.data[i]) * v.data[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ArgumentError("cosine_similarity: zero-norm vector");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double cosine_similarity(const StyleVector& u, const StyleVector& v) {
  return cosine_similarity(u.logits, v.logits);
}

StylometryResult stylometry_identify(const std::vector<StyleVector>& queries,
                                     const RoutingTensor& universe) {
  if (universe.rows.empty()) throw ArgumentError("stylometry: empty universe");
  StylometryResult result;
  std::vector<double> positive_scores, negative_scores;
  for (const StyleVector& q : queries) {
    std::vector<double> scores;
    scores.reserve(universe.rows.size());
    for (const auto& row : universe.rows) scores.push_back(cosine_similarity(q, row));
    int best = 0;
    for (int i = 1; i < universe.size(); ++i) {
      const bool better = scores[static_cast<size_t>(i)] > scores[static_cast<size_t>(best)];
      const bool tie_lower =
          scores[static_cast<size_t>(i)] == scores[static_cast<size_t>(best)] &&
          universe.rows[static_cast<size_t>(i)].player_id <
              universe.rows[static_cast<size_t>(best)].player_id;
      if (better || tie_lower) best = i;
    }
    int true_rank = 0;
    for (int i = 0; i < universe.size(); ++i) {
      const auto& row = universe.rows[static_cast<size_t>(i)];
      const bool positive = row.player_id == q.player_id;
      (positive ? positive_scores : negative_scores).push_back(scores[static_cast<size_t>(i)]);
      if (positive) {
        int rank = 1;
        for (int j = 0; j < universe.size(); ++j) {
          if (j == i) continue;
          const double sj = scores[static_cast<size_t>(j)];
          if (sj > scores[static_cast<size_t>(i)] ||
              (sj == scores[static_cast<size_t>(i)] &&
               universe.rows[static_cast<size_t>(j)].player_id < row.player_id)) {
            ++rank;
          }
        }
        true_rank = rank;
      }
    }
    result.query_ids.push_back(q.player_id);
    result.predicted_ids.push_back(universe.rows[static_cast<size_t>(best)].player_id);
    result.rank_of_true.push_back(true_rank);
    if (true_rank == 1) result.top1 += 1.0;
    result.scores.push_back(std::move(scores));
  }
  if (!queries.empty()) result.top1 /= static_cast<double>(queries.size());

  // ROC over the threshold sweep: descending score order, cumulative rates
  if (!positive_scores.empty() && !negative_scores.empty()) {
    std::vector<std::pair<double, int>> tagged;
    for (const double s : positive_scores) tagged.push_back({s, 1});
    for (const double s : negative_scores) tagged.push_back({s, 0});
    std::sort(tagged.begin(), tagged.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    result.roc.push_back({0.0, 0.0});
    double tp = 0, fp = 0;
    const double np = static_cast<double>(positive_scores.size());
    const double nn = static_cast<double>(negative_scores.size());
    size_t i = 0;
    while (i < tagged.size()) {
      size_t j = i;
      while (j < tagged.size() && tagged[j].first == tagged[i].first) {
        if (tagged[j].second) tp += 1;
        else fp += 1;
        ++j;
      }
      result.roc.push_back({fp / nn, tp / np});
      i = j;
    }
  } else {
    result.roc = {{0.0, 0.0}, {1.0, 1.0}};
  }
  return result;
}

ConsistencyResult consistency_within(const TrainedModel& model,
                                     const std::vector<const PlayerDataset*>& players, int splits,
                                     const TrainConfig& cfg, RngStream rng, int threads) {
  if (splits < 2) throw ArgumentError("consistency_within: need at least 2 splits");
  const int n = static_cast<int>(players.size());
  std::vector<StyleVector> fitted(static_cast<size_t>(n * splits));
  std::vector<std::pair<int, int>> jobs;  // (player index, split index)
  for (int p = 0; p < n; ++p) {
    for (int s = 0; s < splits; ++s) jobs.push_back({p, s});
  }
  parallel_for(static_cast<int>(jobs.size()), threads, [&](int j) {
    const auto [p, s] = jobs[static_cast<size_t>(j)];
    const PlayerDataset& ds = *players[static_cast<size_t>(p)];
    const int games = ds.n_games();
    if (games < splits) throw ArgumentError("consistency_within: fewer games than splits");
    // contiguous game blocks -> disjoint by construction
    const int g0 = games * s / splits, g1 = games * (s + 1) / splits;
    const int r0 = ds.game_row_begin[static_cast<size_t>(g0)];
    const int r1 = ds.game_row_begin[static_cast<size_t>(g1)];
    RngStream frng = rng.stream("fit", static_cast<uint64_t>(p * splits + s));
    fitted[static_cast<size_t>(p * splits + s)] =
        fewshot_fit(model, ds.rows_features(r0, r1), ds.rows_actions(r0, r1), cfg, frng,
                    ds.player_id);
  });
  ConsistencyResult result;
  for (int p = 0; p < n; ++p) {
    for (int s = 0; s < splits; ++s) {
      for (int t = s + 1; t < splits; ++t) {
        result.within.push_back(cosine_similarity(fitted[static_cast<size_t>(p * splits + s)],
                                                  fitted[static_cast<size_t>(p * splits + t)]));
      }
    }
  }
  for (int p = 0; p < n; ++p) {
    for (int q = p + 1; q < n; ++q) {
      for (int s = 0; s < splits; ++s) {
        for (int t = 0; t < splits; ++t) {
          result.cross.push_back(cosine_similarity(fitted[static_cast<size_t>(p * splits + s)],
                                                   fitted[static_cast<size_t>(q * splits + t)]));
        }
      }
    }
  }
  result.mean_within = std::accumulate(result.within.begin(), result.within.end(), 0.0) /
                       static_cast<double>(result.within.size());
  result.mean_cross = std::accumulate(result.cross.begin(), result.cross.end(), 0.0) /
                      static_cast<double>(result.cross.size());
  result.p_value = mann_whitney_p_greater(result.within, result.cross);
  return result;
}

MergeResult merge_consistency(const TrainedModel& model, const PlayerDataset& da,
                              const PlayerDataset& db, const StyleVector& za,
                              const StyleVector& zb, const RoutingTensor& population,
                              const TrainConfig& cfg, RngStream rng) {
  MergeResult result;
  result.player_a = da.player_id;
  result.player_b = db.player_id;
  // equal game counts from each side, canonical (lower id first) order
  const int games = std::min(da.n_games(), db.n_games());
  const PlayerDataset& first = da.player_id <= db.player_id ? da : db;
  const PlayerDataset& second = da.player_id <= db.player_id ? db : da;
  const int rows_first = first.game_row_begin[static_cast<size_t>(games)];
  const int rows_second = second.game_row_begin[static_cast<size_t>(games)];
  Tensor features({rows_first + rows_second, kFeatureDim});
  std::copy(first.features.row(0), first.features.row(0) + static_cast<size_t>(rows_first) * kFeatureDim,
            features.row(0));
  std::copy(second.features.row(0),
            second.features.row(0) + static_cast<size_t>(rows_second) * kFeatureDim,
            features.row(rows_first));
  std::vector<int> actions = first.rows_actions(0, rows_first);
  const std::vector<int> actions_second = second.rows_actions(0, rows_second);
  actions.insert(actions.end(), actions_second.begin(), actions_second.end());

  const StyleVector merged = fewshot_fit(model, features, actions, cfg, rng.stream("fit"), -1);
  Tensor average = za.logits;
  for (size_t i = 0; i < average.data.size(); ++i) {
    average.data[i] = 0.5f * (za.logits.data[i] + zb.logits.data[i]);
  }
  result.cos_to_average = cosine_similarity(merged.logits, average);
  // one random population row, excluding the merged pair
  RngStream pick = rng.stream("pick");
  int idx;
  do {
    idx = static_cast<int>(pick.uniform_int(static_cast<uint64_t>(population.size())));
  } while (population.rows[static_cast<size_t>(idx)].player_id == da.player_id ||
           population.rows[static_cast<size_t>(idx)].player_id == db.player_id);
  result.cos_to_random =
      cosine_similarity(merged.logits, population.rows[static_cast<size_t>(idx)].logits);
  return result;
}

StyleDelta style_delta(const std::vector<const Tensor*>& top_players,
                       const std::vector<const Tensor*>& population) {
  if (top_players.empty() || population.empty()) {
    throw ArgumentError("style_delta: empty player set");
  }
  StyleDelta delta;
  delta.source_count = static_cast<int>(top_players.size());
  delta.delta = Tensor(top_players[0]->shape);
  for (const Tensor* t : top_players) {
    for (size_t i = 0; i < delta.delta.data.size(); ++i) delta.delta.data[i] += t->data[i];
  }
  for (auto& v : delta.delta.data) v /= static_cast<float>(top_players.size());
  Tensor pop_mean(population[0]->shape);
  for (const Tensor* t : population) {
    for (size_t i = 0; i < pop_mean.data.size(); ++i) pop_mean.data[i] += t->data[i];
  }
  for (auto& v : pop_mean.data) v /= static_cast<float>(population.size());
  for (size_t i = 0; i < delta.delta.data.size(); ++i) delta.delta.data[i] -= pop_mean.data[i];
  return delta;
}

StyleVector steer(const StyleVector& style, const StyleDelta& delta, double strength) {
  if (!style.logits.same_shape(delta.delta)) {
    throw DimensionError("steer: style and delta dims differ");
  }
  StyleVector out = style;
  for (size_t i = 0; i < out.logits.data.size(); ++i) {
    // accumulate in double, round once; the +s/-s round trip is then exact
    // except when x + s*d crosses a float binade
    out.logits.data[i] = static_cast<float>(static_cast<double>(style.logits.data[i]) +
                                            strength * static_cast<double>(delta.delta.data[i]));
  }
  return out;
}

std::vector<int> select_top_attribute_players(const std::vector<int>& player_ids,
                                              const std::vector<AttributeProfile>& profiles,
                                              const std::string& attribute, double threshold_std) {
  if (player_ids.size() != profiles.size() || player_ids.empty()) {
    throw ArgumentError("select_top_attribute_players: ids and profiles must align");
  }
  std::vector<double> values;
  values.reserve(profiles.size());
  for (const auto& p : profiles) values.push_back(p.get(attribute));
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
  double var = 0;
  for (const double v : values) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / static_cast<double>(values.size()));
  const double cutoff = mean + threshold_std * stddev;
  std::vector<int> selected;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] > cutoff) selected.push_back(player_ids[i]);
  }
  // a cutoff at or below the minimum means "no bar" (covers stddev == 0)
  if (selected.empty() && cutoff <= *std::min_element(values.begin(), values.end())) {
    selected = player_ids;
  }
  if (selected.empty()) {
    throw ArgumentError("select_top_attribute_players: no player exceeds " + attribute +
                        " threshold of " + std::to_string(threshold_std) +
                        " std; lower the threshold");
  }
  return selected;
}

AttributeProfile probe_model_attributes(const TrainedModel& model, const Tensor& style,
                                        const std::vector<GameState>& probe_set) {
  const Policy policy = [&](const GameState& s) {
    return net_action_dist(model.net, model.store, &style, s, 1.0);
  };
  return probe_attributes_expected(policy, probe_set);
}

std::vector<double> interpolate_winrate(const TrainedModel& model, const Tensor& weak,
                                        const Tensor& strong, const std::vector<double>& lambdas,
                                        int n_games, double temperature, RngStream rng,
                                        int threads) {
  if (n_games < 1) throw ArgumentError("interpolate_winrate: need at least one game");
  std::vector<double> winrates(lambdas.size(), 0.0);
  parallel_for(static_cast<int>(lambdas.size()), threads, [&](int li) {
    const double lambda = lambdas[static_cast<size_t>(li)];
    Tensor mix = weak;
    for (size_t i = 0; i < mix.data.size(); ++i) {
      mix.data[i] = static_cast<float>((1.0 - lambda) * weak.data[i] + lambda * strong.data[i]);
    }
    const Policy interp = net_policy(model.net, model.store, mix, temperature);
    const Policy anchor = net_policy(model.net, model.store, strong, temperature);
    double score = 0.0;
    RngStream lrng = rng.stream("lambda", static_cast<uint64_t>(li));
    for (int g = 0; g < n_games; ++g) {
      const Side interp_side = g % 2 == 0 ? Side::L : Side::R;
      const MatchResult match =
          interp_side == Side::L
              ? play_match(interp, anchor, lrng.stream("game", static_cast<uint64_t>(g)))
              : play_match(anchor, interp, lrng.stream("game", static_cast<uint64_t>(g)));
      score += win_value(match.winner, interp_side);
    }
    winrates[static_cast<size_t>(li)] = score / n_games;
  });
  return winrates;
}

std::vector<double> round_robin_strength(const TrainedModel& model,
                                         const std::vector<const Tensor*>& styles,
                                         int games_per_pair, double temperature, RngStream rng,
                                         int threads) {
  const int n = static_cast<int>(styles.size());
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
  }
  std::vector<double> scores(static_cast<size_t>(n), 0.0);
  std::vector<double> pair_scores(pairs.size(), 0.0);  // score of the lower index
  parallel_for(static_cast<int>(pairs.size()), threads, [&](int pi) {
    const auto [i, j] = pairs[static_cast<size_t>(pi)];
    const Policy pol_i = net_policy(model.net, model.store, *styles[static_cast<size_t>(i)],
                                    temperature);
    const Policy pol_j = net_policy(model.net, model.store, *styles[static_cast<size_t>(j)],
                                    temperature);
    RngStream prng = rng.stream("pair", static_cast<uint64_t>(pi));
    double score_i = 0.0;
    for (int g = 0; g < games_per_pair; ++g) {
      const Side side_i = g % 2 == 0 ? Side::L : Side::R;
      const MatchResult match =
          side_i == Side::L ? play_match(pol_i, pol_j, prng.stream("game", static_cast<uint64_t>(g)))
                            : play_match(pol_j, pol_i, prng.stream("game", static_cast<uint64_t>(g)));
      score_i += win_value(match.winner, side_i);
    }
    pair_scores[static_cast<size_t>(pi)] = score_i;
  });
  for (size_t pi = 0; pi < pairs.size(); ++pi) {
    const auto [i, j] = pairs[pi];
    scores[static_cast<size_t>(i)] += pair_scores[pi];
    scores[static_cast<size_t>(j)] += games_per_pair - pair_scores[pi];
  }
  const double games_each = static_cast<double>(games_per_pair) * (n - 1);
  for (auto& s : scores) s /= games_each;
  return scores;
}

}  // namespace stylo
