#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "topicpara/config.hpp"
#include "topicpara/model.hpp"
#include "topicpara/optimizer.hpp"
#include "topicpara/rewards.hpp"
#include "topicpara/rng.hpp"
#include "topicpara/vocab.hpp"

namespace topicpara {

struct TrainingState {
  int phase = 1;
  std::uint64_t step = 0;   // updates taken in the current phase
  std::uint64_t epoch = 0;  // completed epochs in the current phase
  double best_score = -1.0;
  std::uint64_t epochs_since_best = 0;
  RngStream rng;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

// Everything needed to resume training or to decode.
struct Checkpoint {
  TrainConfig config;
  Vocabulary vocab;
  ObjectLexicon lexicon;
  Model model;
  Adam optimizer;
  TrainingState state;

  // Fresh model for `config` (whose vocab_size is overwritten from `vocab`).
  static Checkpoint create(TrainConfig config, Vocabulary vocab, ObjectLexicon lexicon);
};

inline constexpr char kCheckpointMagic[8] = {'T', 'P', 'A', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: 8 magic bytes, u32 version, u64 header length, JSON header (config,
// vocabulary, lexicon, training counters, rng state), u32 tensor count, then
// per tensor: name, u32 rank, u64 dims, f64 values. Integers and floats are
// little-endian.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace topicpara
