#include "stylo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>

#include <json.hpp>

#include "stylo/errors.hpp"
#include "stylo/parallel.hpp"
#include "stylo/stats.hpp"
#include "stylo/stylelab.hpp"

namespace stylo::pipeline {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kSchemaVersion = 1;

void ensure_dir(const std::string& path) { fs::create_directories(path); }

std::string write_summary(const RunPaths& paths, const std::string& command,
                          ordered_json metrics) {
  ensure_dir(paths.summaries_dir());
  ordered_json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["command"] = command;
  summary["ok"] = true;
  summary["metrics"] = std::move(metrics);
  const std::string text = summary.dump(2);
  std::ofstream out(paths.summaries_dir() + "/" + command + ".json");
  if (!out) throw ConfigError("cannot write summary for " + command);
  out << text << "\n";
  return text;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "epoch,split,loss,accuracy\n";
  for (const auto& p : curve) {
    out << p.epoch << ',' << p.split << ',' << p.loss << ',' << p.accuracy << '\n';
  }
}

std::vector<const PlayerDataset*> select_datasets(const std::vector<PlayerDataset>& all,
                                                  const std::vector<int>& ids) {
  std::vector<const PlayerDataset*> out;
  for (const int id : ids) out.push_back(&DataBundle::find(all, id));
  return out;
}

const StyleVector& routing_row_for(const RoutingTensor& routing, int player_id) {
  for (const auto& row : routing.rows) {
    if (row.player_id == player_id) return row;
  }
  throw ArgumentError("no routing row for player " + std::to_string(player_id));
}

struct ProbeArtifacts {
  std::vector<int> player_ids;
  std::vector<AttributeProfile> profiles;
};

ProbeArtifacts load_profiles(const RunPaths& paths) {
  const std::string path = paths.analysis_dir() + "/profiles.json";
  require_artifact(path, "probe");
  std::ifstream in(path);
  ordered_json j;
  in >> j;
  ProbeArtifacts out;
  for (const auto& entry : j.at("profiles")) {
    out.player_ids.push_back(entry.at("player"));
    AttributeProfile p;
    p.aggression = entry.at("aggression");
    p.goal_threat = entry.at("goal_threat");
    p.defensiveness = entry.at("defensiveness");
    p.kick_rate = entry.at("kick_rate");
    out.profiles.push_back(p);
  }
  return out;
}

LoadedCheckpoint load_finetuned(const RunPaths& paths) {
  require_artifact(paths.finetuned_ckpt() + ".json", "finetune");
  LoadedCheckpoint ck = load_checkpoint(paths.finetuned_ckpt());
  if (!ck.has_routing) throw ConfigError("finetuned checkpoint lacks routing rows");
  return ck;
}

}  // namespace

PopulationArtifacts load_population(const RunPaths& paths) {
  require_artifact(paths.population(), "gen-population");
  std::ifstream in(paths.population());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed population file: ") + e.what());
  }
  PopulationArtifacts art;
  for (const auto& entry : j.at("players")) {
    PlayerSpec spec;
    spec.id = entry.at("id");
    spec.cluster = entry.at("cluster");
    spec.params.chase_weight = entry.at("chase_weight");
    spec.params.goal_push_weight = entry.at("goal_push_weight");
    spec.params.defend_weight = entry.at("defend_weight");
    spec.params.kick_bias = entry.at("kick_bias");
    spec.params.temperature = entry.at("temperature");
    art.players.push_back(spec);
  }
  const auto& part = j.at("partition");
  art.partition.base_ids = part.at("base_ids").get<std::vector<int>>();
  art.partition.finetune_ids = part.at("finetune_ids").get<std::vector<int>>();
  art.partition.fewshot_ids = part.at("fewshot_ids").get<std::vector<int>>();
  art.partition.seen_query_ids = part.at("seen_query_ids").get<std::vector<int>>();
  return art;
}

std::string gen_population(const RunConfig& cfg, const RunPaths& paths) {
  ensure_dir(paths.out);
  RngStream root(cfg.seed);
  const std::vector<PlayerSpec> players =
      sample_population(cfg.population, root.stream("population"));
  const PopulationPartition partition =
      make_partition(players, cfg.partition, root.stream("partition"));

  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "population";
  ordered_json list = ordered_json::array();
  for (const auto& spec : players) {
    list.push_back({{"id", spec.id},
                    {"cluster", spec.cluster},
                    {"chase_weight", spec.params.chase_weight},
                    {"goal_push_weight", spec.params.goal_push_weight},
                    {"defend_weight", spec.params.defend_weight},
                    {"kick_bias", spec.params.kick_bias},
                    {"temperature", spec.params.temperature}});
  }
  j["players"] = list;
  j["partition"] = {{"base_ids", partition.base_ids},
                    {"finetune_ids", partition.finetune_ids},
                    {"fewshot_ids", partition.fewshot_ids},
                    {"seen_query_ids", partition.seen_query_ids}};
  std::ofstream out(paths.population());
  if (!out) throw ConfigError("cannot write " + paths.population());
  out << j.dump(2) << "\n";
  save_run_config(paths.config(), cfg);

  return write_summary(paths, "gen-population",
                       {{"players", players.size()},
                        {"clusters", cfg.population.n_clusters},
                        {"base", partition.base_ids.size()},
                        {"finetune", partition.finetune_ids.size()},
                        {"fewshot", partition.fewshot_ids.size()}});
}

std::string gen_data(const RunConfig& cfg, const RunPaths& paths, int trajectory_games) {
  const PopulationArtifacts pop = load_population(paths);
  ensure_dir(paths.data_dir());
  RngStream root(cfg.seed);
  RngStream data_rng = root.stream("gen-data");

  const auto opponents_for = [&](int focal_id, RngStream& prng) {
    std::vector<PlayerSpec> opponents;
    for (const auto& spec : pop.players) {
      if (spec.id != focal_id) opponents.push_back(spec);
    }
    prng.shuffle(opponents);
    return opponents;
  };
  const auto spec_of = [&](int id) -> const PlayerSpec& {
    for (const auto& spec : pop.players) {
      if (spec.id == id) return spec;
    }
    throw ConfigError("population file lacks player " + std::to_string(id));
  };

  DataBundle bundle;
  bundle.main.resize(pop.partition.base_ids.size());
  parallel_for(static_cast<int>(pop.partition.base_ids.size()), cfg.threads, [&](int i) {
    const int id = pop.partition.base_ids[static_cast<size_t>(i)];
    RngStream prng = data_rng.stream("player", static_cast<uint64_t>(id));
    RngStream orng = prng.stream("opponents");
    const auto opponents = opponents_for(id, orng);
    const int span = cfg.games.games_hi - cfg.games.games_lo;
    int n_games = cfg.games.games_lo;
    if (span > 0) {
      n_games = static_cast<int>(std::lround(
          prng.stream("count").log_uniform(cfg.games.games_lo, cfg.games.games_hi)));
      n_games = std::clamp(n_games, cfg.games.games_lo, cfg.games.games_hi);
    }
    bundle.main[static_cast<size_t>(i)] =
        generate_games(spec_of(id), opponents, n_games, prng.stream("games"));
  });

  bundle.reference.resize(pop.partition.fewshot_ids.size());
  parallel_for(static_cast<int>(pop.partition.fewshot_ids.size()), cfg.threads, [&](int i) {
    const int id = pop.partition.fewshot_ids[static_cast<size_t>(i)];
    RngStream prng = data_rng.stream("player-ref", static_cast<uint64_t>(id));
    RngStream orng = prng.stream("opponents");
    const auto opponents = opponents_for(id, orng);
    bundle.reference[static_cast<size_t>(i)] =
        generate_games(spec_of(id), opponents, cfg.games.reference_games, prng.stream("games"));
  });

  std::vector<int> query_ids = pop.partition.fewshot_ids;
  query_ids.insert(query_ids.end(), pop.partition.seen_query_ids.begin(),
                   pop.partition.seen_query_ids.end());
  bundle.query.resize(query_ids.size());
  parallel_for(static_cast<int>(query_ids.size()), cfg.threads, [&](int i) {
    const int id = query_ids[static_cast<size_t>(i)];
    RngStream prng = data_rng.stream("player-query", static_cast<uint64_t>(id));
    RngStream orng = prng.stream("opponents");
    const auto opponents = opponents_for(id, orng);
    bundle.query[static_cast<size_t>(i)] =
        generate_games(spec_of(id), opponents, cfg.games.query_games, prng.stream("games"));
  });

  save_datasets(paths.datasets(), bundle);

  if (trajectory_games > 0) {
    std::vector<MatchResult> matches;
    RngStream trng = data_rng.stream("trajectories");
    for (int g = 0; g < trajectory_games; ++g) {
      const PlayerSpec& a = pop.players[static_cast<size_t>(trng.uniform_int(pop.players.size()))];
      const PlayerSpec& b = pop.players[static_cast<size_t>(trng.uniform_int(pop.players.size()))];
      const Policy pa = [&a](const GameState& s) { return scripted_policy(a.params, s); };
      const Policy pb = [&b](const GameState& s) { return scripted_policy(b.params, s); };
      matches.push_back(play_match(pa, pb, trng.stream("game", static_cast<uint64_t>(g))));
    }
    write_trajectories(paths.data_dir() + "/trajectories.csv", matches);
  }

  size_t total_rows = 0, total_games = 0;
  for (const auto& ds : bundle.main) {
    total_rows += static_cast<size_t>(ds.rows());
    total_games += static_cast<size_t>(ds.n_games());
  }
  return write_summary(paths, "gen-data",
                       {{"main_players", bundle.main.size()},
                        {"reference_players", bundle.reference.size()},
                        {"query_players", bundle.query.size()},
                        {"main_rows", total_rows},
                        {"main_games", total_games}});
}

std::string train_base_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const PopulationArtifacts pop = load_population(paths);
  require_artifact(paths.datasets() + ".json", "gen-data");
  const DataBundle bundle = load_datasets(paths.datasets());
  const auto datasets = select_datasets(bundle.main, pop.partition.base_ids);
  std::vector<CurvePoint> curve;
  TrainedModel model = train_base(datasets, cfg.net, cfg.train, cfg.seed, &curve);
  ensure_dir(paths.checkpoints_dir());
  ensure_dir(paths.curves_dir());
  save_checkpoint(paths.base_ckpt(), model);
  write_curve_csv(paths.curves_dir() + "/base_train.csv", curve);
  double test_loss = 0.0, test_acc = 0.0;
  for (const auto& p : curve) {
    if (p.split == "test") {
      test_loss = p.loss;
      test_acc = p.accuracy;
    }
  }
  return write_summary(paths, "train-base",
                       {{"players", datasets.size()},
                        {"epochs_run", curve.empty() ? 0 : curve[curve.size() - 2].epoch + 1},
                        {"test_loss", test_loss},
                        {"test_accuracy", test_acc}});
}

std::string finetune_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const PopulationArtifacts pop = load_population(paths);
  require_artifact(paths.datasets() + ".json", "gen-data");
  require_artifact(paths.base_ckpt() + ".json", "train-base");
  const DataBundle bundle = load_datasets(paths.datasets());
  LoadedCheckpoint base = load_checkpoint(paths.base_ckpt());
  const auto datasets = select_datasets(bundle.main, pop.partition.finetune_ids);

  std::vector<CurvePoint> curve;
  std::vector<std::string> warnings;
  const RoutingTensor routing =
      finetune_mhr(base.model, datasets, cfg.train, cfg.seed, &curve, &warnings);
  ensure_dir(paths.curves_dir());
  write_curve_csv(paths.curves_dir() + "/finetune.csv", curve);
  save_checkpoint(paths.finetuned_ckpt(), base.model, &pop.partition.finetune_ids);

  const EvalTable tuned = eval_per_player(base.model, routing, datasets, Split::Test);
  const EvalTable baseline = eval_per_player_base(base.model, datasets, Split::Test);
  ordered_json metrics = {{"players", datasets.size()},
                          {"finetuned_mean_accuracy", tuned.mean},
                          {"finetuned_min_accuracy", tuned.min},
                          {"finetuned_max_accuracy", tuned.max},
                          {"base_mean_accuracy", baseline.mean},
                          {"base_min_accuracy", baseline.min},
                          {"base_max_accuracy", baseline.max},
                          {"accuracy_lift", tuned.mean - baseline.mean}};
  if (!warnings.empty()) metrics["warnings"] = warnings;
  return write_summary(paths, "finetune", std::move(metrics));
}

std::string fewshot_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const PopulationArtifacts pop = load_population(paths);
  require_artifact(paths.datasets() + ".json", "gen-data");
  const DataBundle bundle = load_datasets(paths.datasets());
  const LoadedCheckpoint ck = load_finetuned(paths);
  RngStream root(cfg.seed);
  RngStream fs_rng = root.stream("fewshot");

  std::vector<StyleVector> vectors(pop.partition.fewshot_ids.size());
  parallel_for(static_cast<int>(vectors.size()), cfg.threads, [&](int i) {
    const int id = pop.partition.fewshot_ids[static_cast<size_t>(i)];
    const PlayerDataset& ref = DataBundle::find(bundle.reference, id);
    vectors[static_cast<size_t>(i)] =
        fewshot_fit(ck.model, ref, cfg.train, fs_rng.stream("player", static_cast<uint64_t>(id)));
  });
  ensure_dir(paths.fewshot_dir());
  save_style_vectors(paths.reference_vectors(), vectors);
  return write_summary(paths, "fewshot", {{"players", vectors.size()}});
}

std::string stylometry_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const PopulationArtifacts pop = load_population(paths);
  require_artifact(paths.datasets() + ".json", "gen-data");
  const DataBundle bundle = load_datasets(paths.datasets());
  const LoadedCheckpoint ck = load_finetuned(paths);
  require_artifact(paths.reference_vectors() + ".json", "fewshot");
  const std::vector<StyleVector> reference_vectors =
      load_style_vectors(paths.reference_vectors());
  RngStream root(cfg.seed);
  ensure_dir(paths.analysis_dir());

  // seen players: query-fit vectors against the fine-tuned universe
  std::vector<StyleVector> seen_queries(pop.partition.seen_query_ids.size());
  RngStream seen_rng = root.stream("stylometry-seen");
  parallel_for(static_cast<int>(seen_queries.size()), cfg.threads, [&](int i) {
    const int id = pop.partition.seen_query_ids[static_cast<size_t>(i)];
    const PlayerDataset& q = DataBundle::find(bundle.query, id);
    seen_queries[static_cast<size_t>(i)] =
        fewshot_fit(ck.model, q, cfg.train, seen_rng.stream("player", static_cast<uint64_t>(id)));
  });
  const StylometryResult seen = stylometry_identify(seen_queries, ck.routing);

  // unseen players: reference-fit rows plus fine-tuning distractors
  RoutingTensor unseen_universe;
  unseen_universe.modules = ck.routing.modules;
  unseen_universe.heads = ck.routing.heads;
  for (const auto& v : reference_vectors) unseen_universe.rows.push_back(v);
  const int distractors =
      std::min(cfg.analysis.unseen_distractors, ck.routing.size());
  for (int i = 0; i < distractors; ++i) {
    unseen_universe.rows.push_back(ck.routing.rows[static_cast<size_t>(i)]);
  }
  std::vector<StyleVector> unseen_queries(pop.partition.fewshot_ids.size());
  RngStream unseen_rng = root.stream("stylometry-unseen");
  parallel_for(static_cast<int>(unseen_queries.size()), cfg.threads, [&](int i) {
    const int id = pop.partition.fewshot_ids[static_cast<size_t>(i)];
    const PlayerDataset& q = DataBundle::find(bundle.query, id);
    unseen_queries[static_cast<size_t>(i)] = fewshot_fit(
        ck.model, q, cfg.train, unseen_rng.stream("player", static_cast<uint64_t>(id)));
  });
  const StylometryResult unseen = stylometry_identify(unseen_queries, unseen_universe);

  const auto write_result_csv = [&](const std::string& path, const StylometryResult& r) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "query_id,predicted_id,rank_of_true\n";
    for (size_t i = 0; i < r.query_ids.size(); ++i) {
      out << r.query_ids[i] << ',' << r.predicted_ids[i] << ',' << r.rank_of_true[i] << '\n';
    }
  };
  const auto write_roc_csv = [&](const std::string& path, const StylometryResult& r) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "fpr,tpr\n";
    for (const auto& [fpr, tpr] : r.roc) out << fpr << ',' << tpr << '\n';
  };
  write_result_csv(paths.analysis_dir() + "/stylometry_seen.csv", seen);
  write_result_csv(paths.analysis_dir() + "/stylometry_unseen.csv", unseen);
  write_roc_csv(paths.analysis_dir() + "/roc_seen.csv", seen);
  write_roc_csv(paths.analysis_dir() + "/roc_unseen.csv", unseen);

  return write_summary(paths, "stylometry",
                       {{"seen_queries", seen_queries.size()},
                        {"seen_universe", ck.routing.size()},
                        {"seen_top1", seen.top1},
                        {"unseen_queries", unseen_queries.size()},
                        {"unseen_universe", unseen_universe.size()},
                        {"unseen_top1", unseen.top1}});
}

std::string consistency_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const PopulationArtifacts pop = load_population(paths);
  require_artifact(paths.datasets() + ".json", "gen-data");
  const DataBundle bundle = load_datasets(paths.datasets());
  const LoadedCheckpoint ck = load_finetuned(paths);
  RngStream root(cfg.seed);

  // the fine-tuning players with the most games, for stable split fits
  auto ids = pop.partition.finetune_ids;
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    const int ga = DataBundle::find(bundle.main, a).n_games();
    const int gb = DataBundle::find(bundle.main, b).n_games();
    return ga != gb ? ga > gb : a < b;
  });
  ids.resize(static_cast<size_t>(
      std::min<int>(cfg.analysis.consistency_players, static_cast<int>(ids.size()))));
  const auto players = select_datasets(bundle.main, ids);

  const ConsistencyResult result =
      consistency_within(ck.model, players, cfg.analysis.consistency_splits, cfg.train,
                         root.stream("consistency"), cfg.threads);

  ensure_dir(paths.analysis_dir());
  std::ofstream out(paths.analysis_dir() + "/consistency_cosines.csv");
  if (!out) throw ConfigError("cannot write consistency_cosines.csv");
  out << "kind,cosine\n";
  for (const double v : result.within) out << "within," << v << '\n';
  for (const double v : result.cross) out << "cross," << v << '\n';

  return write_summary(paths, "consistency",
                       {{"players", players.size()},
                        {"splits", cfg.analysis.consistency_splits},
                        {"mean_within", result.mean_within},
                        {"mean_cross", result.mean_cross},
                        {"margin", result.mean_within - result.mean_cross},
                        {"rank_sum_p", result.p_value}});
}

std::string merge_check_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const PopulationArtifacts pop = load_population(paths);
  require_artifact(paths.datasets() + ".json", "gen-data");
  const DataBundle bundle = load_datasets(paths.datasets());
  const LoadedCheckpoint ck = load_finetuned(paths);
  RngStream root(cfg.seed);
  RngStream merge_rng = root.stream("merge");

  std::vector<int> ids = pop.partition.finetune_ids;
  merge_rng.shuffle(ids);
  const int pairs = std::min<int>(cfg.analysis.merge_pairs, static_cast<int>(ids.size()) / 2);
  std::vector<MergeResult> results(static_cast<size_t>(pairs));
  parallel_for(pairs, cfg.threads, [&](int p) {
    const int a = ids[static_cast<size_t>(2 * p)];
    const int b = ids[static_cast<size_t>(2 * p + 1)];
    results[static_cast<size_t>(p)] = merge_consistency(
        ck.model, DataBundle::find(bundle.main, a), DataBundle::find(bundle.main, b),
        routing_row_for(ck.routing, a), routing_row_for(ck.routing, b), ck.routing, cfg.train,
        merge_rng.stream("pair", static_cast<uint64_t>(p)));
  });

  ensure_dir(paths.analysis_dir());
  std::ofstream out(paths.analysis_dir() + "/merge_cosines.csv");
  if (!out) throw ConfigError("cannot write merge_cosines.csv");
  out << "player_a,player_b,cos_to_average,cos_to_random\n";
  int wins = 0;
  double mean_avg = 0, mean_rand = 0;
  for (const auto& r : results) {
    out << r.player_a << ',' << r.player_b << ',' << r.cos_to_average << ',' << r.cos_to_random
        << '\n';
    if (r.cos_to_average > r.cos_to_random) ++wins;
    mean_avg += r.cos_to_average;
    mean_rand += r.cos_to_random;
  }
  return write_summary(paths, "merge-check",
                       {{"pairs", pairs},
                        {"frac_average_beats_random",
                         pairs ? static_cast<double>(wins) / pairs : 0.0},
                        {"mean_cos_to_average", pairs ? mean_avg / pairs : 0.0},
                        {"mean_cos_to_random", pairs ? mean_rand / pairs : 0.0}});
}

std::string probe_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const LoadedCheckpoint ck = load_finetuned(paths);
  RngStream root(cfg.seed);
  const std::vector<GameState> probe_set =
      make_probe_set(cfg.analysis.probe_size, root.stream("probe-set"));

  std::vector<AttributeProfile> profiles(ck.routing.rows.size());
  parallel_for(static_cast<int>(profiles.size()), cfg.threads, [&](int i) {
    profiles[static_cast<size_t>(i)] = probe_model_attributes(
        ck.model, ck.routing.rows[static_cast<size_t>(i)].logits, probe_set);
  });

  ensure_dir(paths.analysis_dir());
  std::ofstream csv(paths.analysis_dir() + "/profiles.csv");
  if (!csv) throw ConfigError("cannot write profiles.csv");
  csv << "player,aggression,goal_threat,defensiveness,kick_rate\n";
  ordered_json jprofiles = ordered_json::array();
  for (size_t i = 0; i < profiles.size(); ++i) {
    const int id = ck.routing.rows[i].player_id;
    const AttributeProfile& p = profiles[i];
    csv << id << ',' << p.aggression << ',' << p.goal_threat << ',' << p.defensiveness << ','
        << p.kick_rate << '\n';
    jprofiles.push_back({{"player", id},
                         {"aggression", p.aggression},
                         {"goal_threat", p.goal_threat},
                         {"defensiveness", p.defensiveness},
                         {"kick_rate", p.kick_rate}});
  }
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "profiles";
  j["probe_size"] = cfg.analysis.probe_size;
  j["profiles"] = jprofiles;
  std::ofstream out(paths.analysis_dir() + "/profiles.json");
  out << j.dump(2) << "\n";

  ordered_json stats = ordered_json::object();
  for (const auto& name : AttributeProfile::names()) {
    std::vector<double> values;
    for (const auto& p : profiles) values.push_back(p.get(name));
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double var = 0;
    for (const double v : values) var += (v - mean) * (v - mean);
    stats[name] = {{"mean", mean}, {"std", std::sqrt(var / values.size())}};
  }
  return write_summary(paths, "probe",
                       {{"players", profiles.size()},
                        {"probe_size", cfg.analysis.probe_size},
                        {"attributes", stats}});
}

std::string steer_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const LoadedCheckpoint ck = load_finetuned(paths);
  const ProbeArtifacts probes = load_profiles(paths);
  RngStream root(cfg.seed);
  const std::vector<GameState> probe_set =
      make_probe_set(cfg.analysis.probe_size, root.stream("probe-set"));

  // population statistics for normalization
  std::vector<double> attr_mean, attr_std;
  for (const auto& name : AttributeProfile::names()) {
    std::vector<double> values;
    for (const auto& p : probes.profiles) values.push_back(p.get(name));
    const double mean =
        std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double var = 0;
    for (const double v : values) var += (v - mean) * (v - mean);
    attr_mean.push_back(mean);
    attr_std.push_back(std::max(1e-9, std::sqrt(var / values.size())));
  }

  std::vector<const Tensor*> population_rows;
  for (const auto& row : ck.routing.rows) population_rows.push_back(&row.logits);

  ensure_dir(paths.analysis_dir());
  std::ofstream csv(paths.analysis_dir() + "/steering.csv");
  if (!csv) throw ConfigError("cannot write steering.csv");
  csv << "steer_attribute,player,attribute,before,after,norm_change\n";

  ordered_json per_attribute = ordered_json::object();
  RngStream pick_rng = root.stream("steer-pick");
  for (const std::string& attr : cfg.analysis.steer_attributes) {
    const std::vector<int> top_ids = select_top_attribute_players(
        probes.player_ids, probes.profiles, attr, cfg.analysis.steer_threshold_std);
    std::vector<const Tensor*> top_rows;
    for (const int id : top_ids) top_rows.push_back(&routing_row_for(ck.routing, id).logits);
    StyleDelta delta = style_delta(top_rows, population_rows);
    delta.attribute = attr;

    std::vector<int> targets(static_cast<size_t>(ck.routing.size()));
    std::iota(targets.begin(), targets.end(), 0);
    pick_rng.shuffle(targets);
    targets.resize(static_cast<size_t>(
        std::min<int>(cfg.analysis.steer_players, static_cast<int>(targets.size()))));

    std::vector<AttributeProfile> after(targets.size());
    parallel_for(static_cast<int>(targets.size()), cfg.threads, [&](int i) {
      const auto& row = ck.routing.rows[static_cast<size_t>(targets[static_cast<size_t>(i)])];
      StyleVector steered = steer(row, delta, cfg.analysis.steer_strength);
      after[static_cast<size_t>(i)] = probe_model_attributes(ck.model, steered.logits, probe_set);
    });

    int increased = 0;
    double on_target_sum = 0, off_target_sum = 0;
    for (size_t i = 0; i < targets.size(); ++i) {
      const auto& row = ck.routing.rows[static_cast<size_t>(targets[i])];
      // before-profile from the probe stage (same probe set, same greedy rule)
      const AttributeProfile* before = nullptr;
      for (size_t k = 0; k < probes.player_ids.size(); ++k) {
        if (probes.player_ids[k] == row.player_id) before = &probes.profiles[k];
      }
      if (!before) throw ConfigError("profiles.json lacks player " + std::to_string(row.player_id));
      double off_abs = 0;
      int off_count = 0;
      const auto& names = AttributeProfile::names();
      for (size_t a = 0; a < names.size(); ++a) {
        const double change = after[i].get(names[a]) - before->get(names[a]);
        const double norm_change = change / attr_std[a];
        csv << attr << ',' << row.player_id << ',' << names[a] << ',' << before->get(names[a])
            << ',' << after[i].get(names[a]) << ',' << norm_change << '\n';
        if (names[a] == attr) {
          if (change > 0) ++increased;
          on_target_sum += norm_change;
        } else {
          off_abs += std::abs(norm_change);
          ++off_count;
        }
      }
      off_target_sum += off_abs / off_count;
    }
    per_attribute[attr] = {
        {"top_players", top_ids.size()},
        {"steered_players", targets.size()},
        {"frac_increased", static_cast<double>(increased) / targets.size()},
        {"mean_on_target_norm_change", on_target_sum / targets.size()},
        {"mean_off_target_abs_norm_change", off_target_sum / targets.size()}};
  }
  return write_summary(paths, "steer",
                       {{"strength", cfg.analysis.steer_strength},
                        {"threshold_std", cfg.analysis.steer_threshold_std},
                        {"attributes", per_attribute}});
}

std::string interpolate_cmd(const RunConfig& cfg, const RunPaths& paths) {
  const LoadedCheckpoint ck = load_finetuned(paths);
  RngStream root(cfg.seed);
  RngStream interp_rng = root.stream("interpolate");

  std::vector<int> pool(static_cast<size_t>(ck.routing.size()));
  std::iota(pool.begin(), pool.end(), 0);
  RngStream pick = interp_rng.stream("pick");
  pick.shuffle(pool);
  const int rr_n = std::min<int>(cfg.analysis.rr_players, static_cast<int>(pool.size()));
  pool.resize(static_cast<size_t>(rr_n));

  std::vector<const Tensor*> styles;
  for (const int idx : pool) styles.push_back(&ck.routing.rows[static_cast<size_t>(idx)].logits);
  const std::vector<double> strength =
      round_robin_strength(ck.model, styles, cfg.analysis.rr_games,
                           cfg.analysis.match_temperature, interp_rng.stream("rr"), cfg.threads);

  std::vector<size_t> order(strength.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return strength[a] != strength[b] ? strength[a] < strength[b] : a < b;
  });
  const int n_pairs = std::min<int>(cfg.analysis.interp_pairs, rr_n / 2);

  ensure_dir(paths.analysis_dir());
  std::ofstream csv(paths.analysis_dir() + "/winrate_lambda.csv");
  if (!csv) throw ConfigError("cannot write winrate_lambda.csv");
  csv << "pair,weak_id,strong_id,lambda,winrate\n";

  std::vector<double> pooled_lambda, pooled_winrate;
  double lambda1_sum = 0;
  std::vector<std::vector<double>> curves(static_cast<size_t>(n_pairs));
  parallel_for(n_pairs, cfg.threads, [&](int p) {
    const size_t weak_idx = order[static_cast<size_t>(p)];
    const size_t strong_idx = order[order.size() - 1 - static_cast<size_t>(p)];
    curves[static_cast<size_t>(p)] = interpolate_winrate(
        ck.model, *styles[weak_idx], *styles[strong_idx], cfg.analysis.lambdas,
        cfg.analysis.interp_games, cfg.analysis.match_temperature,
        interp_rng.stream("pair", static_cast<uint64_t>(p)), 1);
  });
  for (int p = 0; p < n_pairs; ++p) {
    const size_t weak_idx = order[static_cast<size_t>(p)];
    const size_t strong_idx = order[order.size() - 1 - static_cast<size_t>(p)];
    const int weak_id = ck.routing.rows[static_cast<size_t>(pool[weak_idx])].player_id;
    const int strong_id = ck.routing.rows[static_cast<size_t>(pool[strong_idx])].player_id;
    for (size_t li = 0; li < cfg.analysis.lambdas.size(); ++li) {
      const double wr = curves[static_cast<size_t>(p)][li];
      csv << p << ',' << weak_id << ',' << strong_id << ',' << cfg.analysis.lambdas[li] << ','
          << wr << '\n';
      pooled_lambda.push_back(cfg.analysis.lambdas[li]);
      pooled_winrate.push_back(wr);
      if (cfg.analysis.lambdas[li] == 1.0) lambda1_sum += wr;
    }
  }
  const double rho = spearman(pooled_lambda, pooled_winrate);
  return write_summary(paths, "interpolate",
                       {{"pairs", n_pairs},
                        {"games_per_point", cfg.analysis.interp_games},
                        {"spearman_lambda_winrate", rho},
                        {"mean_winrate_at_lambda1", n_pairs ? lambda1_sum / n_pairs : 0.0}});
}

std::string report_cmd(const RunConfig& cfg, const RunPaths& paths) {
  (void)cfg;
  ensure_dir(paths.report_dir());
  const std::vector<std::pair<std::string, std::string>> artifacts = {
      {paths.analysis_dir() + "/consistency_cosines.csv", "consistency"},
      {paths.analysis_dir() + "/merge_cosines.csv", "merge-check"},
      {paths.analysis_dir() + "/winrate_lambda.csv", "interpolate"},
      {paths.analysis_dir() + "/steering.csv", "steer"},
      {paths.analysis_dir() + "/roc_seen.csv", "stylometry"},
      {paths.analysis_dir() + "/roc_unseen.csv", "stylometry"},
      {paths.analysis_dir() + "/stylometry_seen.csv", "stylometry"},
      {paths.analysis_dir() + "/stylometry_unseen.csv", "stylometry"},
      {paths.analysis_dir() + "/profiles.csv", "probe"},
  };
  for (const auto& [path, producer] : artifacts) {
    require_artifact(path, producer);
    fs::copy_file(path, paths.report_dir() + "/" + fs::path(path).filename().string(),
                  fs::copy_options::overwrite_existing);
  }
  // aggregate all stage summaries
  ordered_json all = ordered_json::object();
  for (const auto& entry : fs::directory_iterator(paths.summaries_dir())) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    ordered_json j;
    in >> j;
    all[entry.path().stem().string()] = j;
  }
  std::ofstream out(paths.report_dir() + "/summary.json");
  out << all.dump(2) << "\n";
  return write_summary(paths, "report", {{"artifacts", artifacts.size()}});
}

}  // namespace stylo::pipeline
