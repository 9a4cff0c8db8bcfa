#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "topicpara/cae.hpp"
#include "topicpara/generator.hpp"
#include "topicpara/rng.hpp"
#include "topicpara/vocab.hpp"

namespace topicpara {

struct Model {
  ModelDims dims;
  CaeParams cae;
  GeneratorParams gen;

  static Model create(const ModelDims& dims, RngStream& rng, bool batch_norm = true);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  void zero_grad();
};

struct ModelVars {
  CaeVars cae;
  GeneratorVars gen;
};

ModelVars bind(Tape& tape, Model& model);
ModelVars bind(Tape& tape, const Model& model);

// One training or evaluation image.
struct Example {
  const RawRegionSet* regions = nullptr;
  Paragraph gold;

  const std::string& image_id() const { return regions->image_id; }
};

enum class DecodeMode { greedy, sample };

// Per-step view for instrumented decoding.
struct StepTrace {
  std::size_t sentence = 0;
  std::size_t time = 0;
  const Tensor& paragraph_h_before;
  const Tensor& sentence_h_before;
  const Tensor& attention;
  TokenId token = 0;
};

struct DecodeOptions {
  DecodeMode mode = DecodeMode::greedy;
  bool block_trigrams = true;    // greedy only
  std::size_t max_sentences = 0;  // 0 = K
  StepOptions step;              // dropout during sampled training decodes
  RngStream* rng = nullptr;      // required for sampling
  bool record_attention = false;
  std::function<void(const StepTrace&)> observer;
};

struct DecodeResult {
  Paragraph paragraph;
  std::vector<double> stop_probs;  // P(STOP) for each of the K topics
  Var log_prob;                    // sample mode: sum over words and stop decisions
  bool trigram_waived = false;
  std::vector<std::vector<std::vector<double>>> attention;  // [sentence][word][region]
  Tensor topics;
};

// Words never emitted by the decoder.
inline constexpr std::size_t kNeverEmitted[] = {kPad, kBos};

// Runs the topic encoder on `region_map` and decodes up to K sentences.
DecodeResult decode_paragraph(const ModelVars& model, Var region_map, const DecodeOptions& options);

struct TeacherForcedLoss {
  Var word_loss;  // sum of -log P(gold word), full softmax
  Var stop_loss;  // sum of stop-head cross-entropies
  std::size_t tokens = 0;
};

// Gold words feed the recurrence. Each sentence is followed by an EOS target
// unless it already holds T_max words.
TeacherForcedLoss teacher_forced_nll(const ModelVars& model, Var region_map, const Paragraph& gold,
                                     const StepOptions& options = {});

struct PhaseOneLoss {
  Var total;  // mean over the batch of word + lambda_rec * rec + lambda_stop * stop
  double word = 0.0;
  double reconstruction = 0.0;
  double stop = 0.0;
  std::size_t tokens = 0;
  EmbedResult embedded;
};

// The joint cross-entropy, reconstruction and stop loss over one minibatch
// on a single tape; batch normalization sees the statistics of the batch.
PhaseOneLoss phase_one_loss(const ModelVars& model, std::span<const Example> batch, double lambda_rec,
                            double lambda_stop, const StepOptions& options = {}, Mode mode = Mode::train);

}  // namespace topicpara
