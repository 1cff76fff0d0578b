#include "stylo/config.hpp"

#include <fstream>

#include <json.hpp>

#include "stylo/errors.hpp"

namespace stylo {

using ordered_json = nlohmann::ordered_json;

namespace {

// read a field if present, leaving the default otherwise
template <typename T>
void get_to(const ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["population"] = {{"n_players", c.population.n_players},
                     {"n_clusters", c.population.n_clusters},
                     {"chase_lo", c.population.chase_lo},
                     {"chase_hi", c.population.chase_hi},
                     {"chase_spec_lo", c.population.chase_spec_lo},
                     {"chase_spec_hi", c.population.chase_spec_hi},
                     {"push_lo", c.population.push_lo},
                     {"push_hi", c.population.push_hi},
                     {"push_spec_lo", c.population.push_spec_lo},
                     {"push_spec_hi", c.population.push_spec_hi},
                     {"defend_lo", c.population.defend_lo},
                     {"defend_hi", c.population.defend_hi},
                     {"defend_spec_lo", c.population.defend_spec_lo},
                     {"defend_spec_hi", c.population.defend_spec_hi},
                     {"kick_lo", c.population.kick_lo},
                     {"kick_hi", c.population.kick_hi},
                     {"kick_spec_lo", c.population.kick_spec_lo},
                     {"kick_spec_hi", c.population.kick_spec_hi},
                     {"min_center_dist", c.population.min_center_dist},
                     {"player_sigma", c.population.player_sigma},
                     {"temp_lo", c.population.temp_lo},
                     {"temp_hi", c.population.temp_hi}};
  j["partition"] = {{"n_base", c.partition.n_base},
                    {"n_finetune", c.partition.n_finetune},
                    {"n_fewshot", c.partition.n_fewshot},
                    {"n_seen_query", c.partition.n_seen_query}};
  j["games"] = {{"games_lo", c.games.games_lo},
                {"games_hi", c.games.games_hi},
                {"reference_games", c.games.reference_games},
                {"query_games", c.games.query_games}};
  j["net"] = {{"input_dim", c.net.input_dim}, {"width", c.net.width},
              {"blocks", c.net.blocks},       {"hidden", c.net.hidden},
              {"actions", c.net.actions},     {"rank", c.net.rank},
              {"modules", c.net.modules},     {"heads", c.net.heads}};
  j["train"] = {{"epochs_base", c.train.epochs_base},
                {"epochs_finetune", c.train.epochs_finetune},
                {"epochs_fewshot", c.train.epochs_fewshot},
                {"batch", c.train.batch},
                {"lr_base", c.train.lr_base},
                {"lr_adapter", c.train.lr_adapter},
                {"lr_routing", c.train.lr_routing},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"eps", c.train.eps},
                {"patience", c.train.patience},
                {"routing_init_sigma", c.train.routing_init_sigma}};
  j["analysis"] = {{"probe_size", c.analysis.probe_size},
                   {"lambdas", c.analysis.lambdas},
                   {"interp_pairs", c.analysis.interp_pairs},
                   {"interp_games", c.analysis.interp_games},
                   {"rr_players", c.analysis.rr_players},
                   {"rr_games", c.analysis.rr_games},
                   {"match_temperature", c.analysis.match_temperature},
                   {"steer_threshold_std", c.analysis.steer_threshold_std},
                   {"steer_players", c.analysis.steer_players},
                   {"steer_strength", c.analysis.steer_strength},
                   {"steer_attributes", c.analysis.steer_attributes},
                   {"consistency_players", c.analysis.consistency_players},
                   {"consistency_splits", c.analysis.consistency_splits},
                   {"merge_pairs", c.analysis.merge_pairs},
                   {"unseen_distractors", c.analysis.unseen_distractors}};
  return j;
}

RunConfig from_json(const ordered_json& j) {
  RunConfig c;
  get_to(j, "seed", c.seed);
  get_to(j, "threads", c.threads);
  if (j.contains("population")) {
    const auto& p = j.at("population");
    get_to(p, "n_players", c.population.n_players);
    get_to(p, "n_clusters", c.population.n_clusters);
    get_to(p, "chase_lo", c.population.chase_lo);
    get_to(p, "chase_hi", c.population.chase_hi);
    get_to(p, "chase_spec_lo", c.population.chase_spec_lo);
    get_to(p, "chase_spec_hi", c.population.chase_spec_hi);
    get_to(p, "push_lo", c.population.push_lo);
    get_to(p, "push_hi", c.population.push_hi);
    get_to(p, "push_spec_lo", c.population.push_spec_lo);
    get_to(p, "push_spec_hi", c.population.push_spec_hi);
    get_to(p, "defend_lo", c.population.defend_lo);
    get_to(p, "defend_hi", c.population.defend_hi);
    get_to(p, "defend_spec_lo", c.population.defend_spec_lo);
    get_to(p, "defend_spec_hi", c.population.defend_spec_hi);
    get_to(p, "kick_lo", c.population.kick_lo);
    get_to(p, "kick_hi", c.population.kick_hi);
    get_to(p, "kick_spec_lo", c.population.kick_spec_lo);
    get_to(p, "kick_spec_hi", c.population.kick_spec_hi);
    get_to(p, "min_center_dist", c.population.min_center_dist);
    get_to(p, "player_sigma", c.population.player_sigma);
    get_to(p, "temp_lo", c.population.temp_lo);
    get_to(p, "temp_hi", c.population.temp_hi);
  }
  if (j.contains("partition")) {
    const auto& p = j.at("partition");
    get_to(p, "n_base", c.partition.n_base);
    get_to(p, "n_finetune", c.partition.n_finetune);
    get_to(p, "n_fewshot", c.partition.n_fewshot);
    get_to(p, "n_seen_query", c.partition.n_seen_query);
  }
  if (j.contains("games")) {
    const auto& p = j.at("games");
    get_to(p, "games_lo", c.games.games_lo);
    get_to(p, "games_hi", c.games.games_hi);
    get_to(p, "reference_games", c.games.reference_games);
    get_to(p, "query_games", c.games.query_games);
  }
  if (j.contains("net")) {
    const auto& p = j.at("net");
    get_to(p, "input_dim", c.net.input_dim);
    get_to(p, "width", c.net.width);
    get_to(p, "blocks", c.net.blocks);
    get_to(p, "hidden", c.net.hidden);
    get_to(p, "actions", c.net.actions);
    get_to(p, "rank", c.net.rank);
    get_to(p, "modules", c.net.modules);
    get_to(p, "heads", c.net.heads);
  }
  if (j.contains("train")) {
    const auto& p = j.at("train");
    get_to(p, "epochs_base", c.train.epochs_base);
    get_to(p, "epochs_finetune", c.train.epochs_finetune);
    get_to(p, "epochs_fewshot", c.train.epochs_fewshot);
    get_to(p, "batch", c.train.batch);
    get_to(p, "lr_base", c.train.lr_base);
    get_to(p, "lr_adapter", c.train.lr_adapter);
    get_to(p, "lr_routing", c.train.lr_routing);
    get_to(p, "beta1", c.train.beta1);
    get_to(p, "beta2", c.train.beta2);
    get_to(p, "eps", c.train.eps);
    get_to(p, "patience", c.train.patience);
    get_to(p, "routing_init_sigma", c.train.routing_init_sigma);
  }
  if (j.contains("analysis")) {
    const auto& p = j.at("analysis");
    get_to(p, "probe_size", c.analysis.probe_size);
    get_to(p, "lambdas", c.analysis.lambdas);
    get_to(p, "interp_pairs", c.analysis.interp_pairs);
    get_to(p, "interp_games", c.analysis.interp_games);
    get_to(p, "rr_players", c.analysis.rr_players);
    get_to(p, "rr_games", c.analysis.rr_games);
    get_to(p, "match_temperature", c.analysis.match_temperature);
    get_to(p, "steer_threshold_std", c.analysis.steer_threshold_std);
    get_to(p, "steer_players", c.analysis.steer_players);
    get_to(p, "steer_strength", c.analysis.steer_strength);
    get_to(p, "steer_attributes", c.analysis.steer_attributes);
    get_to(p, "consistency_players", c.analysis.consistency_players);
    get_to(p, "consistency_splits", c.analysis.consistency_splits);
    get_to(p, "merge_pairs", c.analysis.merge_pairs);
    get_to(p, "unseen_distractors", c.analysis.unseen_distractors);
  }
  return c;
}

}  // namespace

void RunConfig::validate() const {
  net.validate();
  if (population.n_players < partition.n_base + partition.n_fewshot) {
    throw ConfigError("config: n_players must cover base + few-shot sets");
  }
  if (games.games_lo < 10) throw ConfigError("config: games_lo must be >= 10 for the 80/10/10 split");
  if (games.games_lo > games.games_hi) throw ConfigError("config: games_lo > games_hi");
  if (threads < 1) throw ConfigError("config: threads must be >= 1");
  if (train.batch < 1) throw ConfigError("config: batch must be >= 1");
  if (population.temp_lo <= 0) throw ConfigError("config: temperatures must be positive");
  for (const double l : analysis.lambdas) {
    if (l < 0.0 || l > 1.0) throw ConfigError("config: lambdas must lie in [0, 1]");
  }
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("missing config file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
  RunConfig cfg = from_json(j);
  cfg.validate();
  return cfg;
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << to_json(cfg).dump(2) << "\n";
}

std::string run_config_to_json(const RunConfig& cfg) { return to_json(cfg).dump(2); }

RunConfig run_config_from_json(const std::string& text) {
  RunConfig cfg = from_json(ordered_json::parse(text));
  cfg.validate();
  return cfg;
}

}  // namespace stylo
