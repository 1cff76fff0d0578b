#pragma once

#include <string>

#include "stylo/config.hpp"
#include "stylo/population.hpp"
#include "stylo/serialize.hpp"

namespace stylo::pipeline {

struct RunPaths {
  std::string out;

  std::string config() const { return out + "/config.json"; }
  std::string population() const { return out + "/population.json"; }
  std::string data_dir() const { return out + "/data"; }
  std::string datasets() const { return data_dir() + "/datasets"; }
  std::string checkpoints_dir() const { return out + "/checkpoints"; }
  std::string base_ckpt() const { return checkpoints_dir() + "/base"; }
  std::string finetuned_ckpt() const { return checkpoints_dir() + "/finetuned"; }
  std::string fewshot_dir() const { return out + "/fewshot"; }
  std::string reference_vectors() const { return fewshot_dir() + "/reference_vectors"; }
  std::string curves_dir() const { return out + "/curves"; }
  std::string analysis_dir() const { return out + "/analysis"; }
  std::string summaries_dir() const { return out + "/summaries"; }
  std::string report_dir() const { return out + "/report"; }
};

struct PopulationArtifacts {
  std::vector<PlayerSpec> players;
  PopulationPartition partition;
};

PopulationArtifacts load_population(const RunPaths& paths);

// Stage entry points: each reads its upstream artifacts, writes its outputs
// plus summaries/<command>.json, and returns the summary text.
std::string gen_population(const RunConfig& cfg, const RunPaths& paths);
std::string gen_data(const RunConfig& cfg, const RunPaths& paths, int trajectory_games = 0);
std::string train_base_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string finetune_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string fewshot_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string stylometry_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string consistency_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string merge_check_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string probe_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string steer_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string interpolate_cmd(const RunConfig& cfg, const RunPaths& paths);
std::string report_cmd(const RunConfig& cfg, const RunPaths& paths);

}  // namespace stylo::pipeline
