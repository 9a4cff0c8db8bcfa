#pragma once

#include <vector>

#include "topicpara/dims.hpp"
#include "topicpara/parameter.hpp"
#include "topicpara/rng.hpp"
#include "topicpara/tape.hpp"
#include "topicpara/vocab.hpp"

namespace topicpara {

// LSTM weights for gate order (input, forget, output, candidate).
struct LstmParams {
  Parameter input_w;   // [in x 4H]
  Parameter hidden_w;  // [H x 4H]
  Parameter bias;      // [4H], forget slice initialized to 1
};

struct GeneratorParams {
  Parameter word_embed;  // [V x D_s]
  LstmParams paragraph;  // input H + D1 + D_s
  LstmParams sentence;   // input D1 + D2 + H
  Parameter att_w;       // [D3]
  Parameter att_region;  // [D1 x D3]
  Parameter att_hidden;  // [H x D3]
  Parameter att_topic;   // [D2 x D3]
  Parameter out_w;       // [H x V]
  Parameter out_b;       // [V]

  static GeneratorParams create(const ModelDims& dims, RngStream& rng);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

struct LstmVars {
  Var input_w, hidden_w, bias;
};

struct GeneratorVars {
  ModelDims dims;
  Var word_embed;
  LstmVars paragraph, sentence;
  Var att_w, att_region, att_hidden, att_topic;
  Var out_w, out_b;
};

GeneratorVars bind(Tape& tape, const ModelDims& dims, GeneratorParams& params);
GeneratorVars bind(Tape& tape, const ModelDims& dims, const GeneratorParams& params);

// Training-time stochasticity. Dropout applies only when `training` is set.
struct StepOptions {
  bool training = false;
  double dropout = 0.0;
  RngStream* rng = nullptr;
};

struct LstmState {
  Var h;
  Var c;
};

struct GeneratorState {
  LstmState paragraph;
  LstmState sentence;
  std::size_t sentence_index = 0;
  std::size_t time_index = 0;
};

// Zero paragraph and sentence states.
GeneratorState begin_paragraph(Tape& tape, const ModelDims& dims);
// Zeroes the sentence-level state only; the paragraph state carries over.
void begin_sentence(GeneratorState& state, Tape& tape, const ModelDims& dims, std::size_t sentence_index);

// One LSTM cell update from the pre-activation gates [4H] and previous cell.
LstmState lstm_cell(Var gates, Var prev_cell);
LstmState lstm_step(const LstmVars& weights, Var input, const LstmState& prev);

// Per-image values reused by every step.
struct RegionContext {
  Var regions;    // V [M x D1]
  Var mean;       // [D1]
  Var projected;  // V * W_v [M x D3]
};
RegionContext make_region_context(const GeneratorVars& gen, Var region_map);

// Paragraph-level step on [h_s(t-1), mean feature, W_s w(t-1)]. Returns h_p.
Var step_paragraph_lstm(GeneratorState& state, const RegionContext& regions, TokenId prev_word,
                        const GeneratorVars& gen);

struct Attention {
  Var weights;   // alpha [M]
  Var attended;  // [D1]
};

// a_m = W_att . tanh(W_v v_m + W_h h_p + W_t topic); alpha = softmax(a).
// `topic_projection` is topic * W_t, computed once per sentence.
Attention attend(const RegionContext& regions, Var paragraph_hidden, Var topic_projection, const GeneratorVars& gen,
                 const StepOptions& options = {});
Var project_topic(Var topic, const GeneratorVars& gen);

// Sentence-level step on [attended, topic, h_p]; returns vocabulary logits.
Var step_sentence_lstm(GeneratorState& state, Var attended, Var topic, Var paragraph_hidden, const GeneratorVars& gen,
                       const StepOptions& options = {});

}  // namespace topicpara
