#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "topicpara/checkpoint.hpp"
#include "topicpara/corpus.hpp"
#include "topicpara/features.hpp"
#include "topicpara/metrics.hpp"

namespace topicpara {

// Examples for the train and validation splits. Examples point into
// `features`, which must stay alive and unmodified.
struct TrainingData {
  std::vector<Example> train;
  std::vector<Example> val;
};

// Tokenizes each record of `ids` and pairs it with its region set. Throws when
// an id has no record or no features.
std::vector<Example> make_examples(const std::vector<std::string>& ids, const std::vector<DatasetRecord>& records,
                                   const FeatureMap& features, const Vocabulary& vocab, const ModelDims& dims);

// CIDEr-D with document frequencies from the gold paragraphs of `examples`.
CiderD make_cider(std::span<const Example> examples, const Vocabulary& vocab);

struct PhaseOneReport {
  double loss = 0.0;
  double word = 0.0;            // summed over the batch
  double reconstruction = 0.0;  // summed over the batch
  double stop = 0.0;            // summed over the batch
  std::size_t tokens = 0;
};

// One Adam update on the joint loss; also advances the batch-norm running
// statistics, the step counter and (through dropout) the checkpoint rng.
PhaseOneReport phase_one_step(Checkpoint& checkpoint, std::span<const Example> batch);

struct PhaseTwoReport {
  double loss = 0.0;
  double sample_reward = 0.0;  // batch mean
  double greedy_reward = 0.0;  // batch mean
};

// One self-critical update: greedy decodes give the baseline, sampled decodes
// the policy gradient.
PhaseTwoReport phase_two_step(Checkpoint& checkpoint, std::span<const Example> batch, const CiderD& cider);

// Switches to phase 2: counters reset, fresh Adam state at the phase-2 rate.
void begin_phase_two(Checkpoint& checkpoint);

// Mean combined reward of greedy decodes.
struct RewardSummary {
  double combined = 0.0;
  double coverage = 0.0;
  double cider = 0.0;
};
RewardSummary mean_greedy_reward(const Checkpoint& checkpoint, std::span<const Example> examples,
                                 const CiderD& cider);

using TrainLog = std::function<void(const std::string&)>;

// Epoch loop with shuffled minibatches; validation CIDEr after each epoch,
// early stop after `patience` epochs without gain. Returns the best
// checkpoint (the last one when there is no validation split).
Checkpoint train_phase_one(Checkpoint& checkpoint, const TrainingData& data, const TrainLog& log = {});

// Self-critical epochs; returns the checkpoint with the best mean validation
// reward (the last one when there is no validation split).
Checkpoint train_phase_two(Checkpoint& checkpoint, const TrainingData& data, const TrainLog& log = {});

}  // namespace topicpara
