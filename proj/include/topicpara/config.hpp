#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "topicpara/dims.hpp"

namespace topicpara {

struct TrainConfig {
  ModelDims dims;
  double beta = 8.0;
  double cider_weight = 1.0;  // weight of the CIDEr-D term in the phase-2 reward; 0 = coverage only
  double lr_phase1 = 1e-4;
  double lr_phase2 = 5e-6;
  std::size_t min_count = 4;
  double dropout = 0.5;
  std::uint64_t seed = 1;
  std::size_t batch_size = 8;
  std::size_t epochs_phase1 = 30;
  std::size_t epochs_phase2 = 10;
  std::size_t max_steps_phase1 = 0;  // 0 = no cap beyond the epoch budget
  std::size_t max_steps_phase2 = 0;
  std::size_t patience = 5;          // epochs without validation CIDEr gain
  double lambda_rec = 1.0;
  double lambda_stop = 1.0;
  bool batch_norm = true;
  bool block_trigrams = true;

  // Throws Error on an inconsistent configuration.
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
// Missing keys keep their defaults; unknown keys are an error. A "topic_dim"
// key, if present, must match (D1 - C1) / C2 + 1.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const TrainConfig& config);

}  // namespace topicpara
