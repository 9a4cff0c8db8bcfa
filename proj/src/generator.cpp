#include "topicpara/generator.hpp"

#include <cmath>

#include "topicpara/error.hpp"
#include "topicpara/ops.hpp"

namespace topicpara {

namespace {

LstmParams make_lstm(const std::string& prefix, std::size_t input, std::size_t hidden, RngStream& rng) {
  LstmParams p;
  p.input_w = Parameter(prefix + ".input_weight", Tensor({input, 4 * hidden}));
  p.hidden_w = Parameter(prefix + ".hidden_weight", Tensor({hidden, 4 * hidden}));
  p.bias = Parameter(prefix + ".bias", Tensor({4 * hidden}));
  init_uniform(p.input_w, input, rng);
  init_uniform(p.hidden_w, hidden, rng);
  init_uniform(p.bias, hidden, rng);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias.value[j] = 1.0;
  return p;
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class P>
GeneratorVars bind_impl(Tape& tape, const ModelDims& dims, P& p) {
  GeneratorVars g;
  g.dims = dims;
  g.word_embed = tape.param(p.word_embed);
  g.paragraph = {tape.param(p.paragraph.input_w), tape.param(p.paragraph.hidden_w), tape.param(p.paragraph.bias)};
  g.sentence = {tape.param(p.sentence.input_w), tape.param(p.sentence.hidden_w), tape.param(p.sentence.bias)};
  g.att_w = tape.param(p.att_w);
  g.att_region = tape.param(p.att_region);
  g.att_hidden = tape.param(p.att_hidden);
  g.att_topic = tape.param(p.att_topic);
  g.out_w = tape.param(p.out_w);
  g.out_b = tape.param(p.out_b);
  return g;
}

}  // namespace

GeneratorParams GeneratorParams::create(const ModelDims& dims, RngStream& rng) {
  dims.validate();
  const std::size_t d1 = dims.embed_dim;
  const std::size_t d2 = dims.topic_dim();
  const std::size_t h = dims.hidden;
  const std::size_t d3 = dims.attention_dim;
  const std::size_t v = dims.vocab_size;
  GeneratorParams p;
  p.word_embed = Parameter("gen.word_embed", Tensor({v, dims.word_dim}));
  init_uniform(p.word_embed, 1, rng);  // one-hot input
  p.paragraph = make_lstm("gen.paragraph_lstm", dims.paragraph_input_dim(), h, rng);
  p.sentence = make_lstm("gen.sentence_lstm", dims.sentence_input_dim(), h, rng);
  p.att_w = Parameter("gen.att.w", Tensor({d3}));
  p.att_region = Parameter("gen.att.region", Tensor({d1, d3}));
  p.att_hidden = Parameter("gen.att.hidden", Tensor({h, d3}));
  p.att_topic = Parameter("gen.att.topic", Tensor({d2, d3}));
  init_uniform(p.att_w, d3, rng);
  init_uniform(p.att_region, d1, rng);
  init_uniform(p.att_hidden, h, rng);
  init_uniform(p.att_topic, d2, rng);
  p.out_w = Parameter("gen.out.weight", Tensor({h, v}));
  p.out_b = Parameter("gen.out.bias", Tensor({v}));
  init_uniform(p.out_w, h, rng);
  init_uniform(p.out_b, h, rng);
  return p;
}

std::vector<Parameter*> GeneratorParams::parameters() {
  return {&word_embed, &paragraph.input_w, &paragraph.hidden_w, &paragraph.bias,
          &sentence.input_w, &sentence.hidden_w, &sentence.bias, &att_w,
          &att_region, &att_hidden, &att_topic, &out_w,
          &out_b};
}

std::vector<const Parameter*> GeneratorParams::parameters() const {
  return {&word_embed, &paragraph.input_w, &paragraph.hidden_w, &paragraph.bias,
          &sentence.input_w, &sentence.hidden_w, &sentence.bias, &att_w,
          &att_region, &att_hidden, &att_topic, &out_w,
          &out_b};
}

GeneratorVars bind(Tape& tape, const ModelDims& dims, GeneratorParams& params) { return bind_impl(tape, dims, params); }
GeneratorVars bind(Tape& tape, const ModelDims& dims, const GeneratorParams& params) {
  return bind_impl(tape, dims, params);
}

GeneratorState begin_paragraph(Tape& tape, const ModelDims& dims) {
  GeneratorState s;
  const Tensor zeros({dims.hidden});
  s.paragraph = {tape.constant(zeros), tape.constant(zeros)};
  s.sentence = {tape.constant(zeros), tape.constant(zeros)};
  return s;
}

void begin_sentence(GeneratorState& state, Tape& tape, const ModelDims& dims, std::size_t sentence_index) {
  const Tensor zeros({dims.hidden});
  state.sentence = {tape.constant(zeros), tape.constant(zeros)};
  state.sentence_index = sentence_index;
  state.time_index = 0;
}

LstmState lstm_cell(Var gates, Var prev_cell) {
  const Tensor& g = gates.value();
  const Tensor& c_prev = prev_cell.value();
  const std::size_t h = c_prev.size();
  if (g.rank() != 1 || g.size() != 4 * h || c_prev.rank() != 1) {
    throw ShapeError("lstm_cell: gates " + to_string(g.shape()) + " do not match cell " + to_string(c_prev.shape()));
  }
  // [i | f | o | u] activations followed by [h | c]
  Tensor act({4 * h});
  Tensor out({2 * h});
  for (std::size_t j = 0; j < h; ++j) {
    const double i = logistic(g[j]);
    const double f = logistic(g[h + j]);
    const double o = logistic(g[2 * h + j]);
    const double u = std::tanh(g[3 * h + j]);
    const double c = f * c_prev[j] + i * u;
    act[j] = i;
    act[h + j] = f;
    act[2 * h + j] = o;
    act[3 * h + j] = u;
    out[h + j] = c;
    out[j] = o * std::tanh(c);
  }
  Tensor cell_values({h});
  for (std::size_t j = 0; j < h; ++j) cell_values[j] = out[h + j];
  Var hc = gates.tape()->record(
      "lstm_cell", std::move(out), {gates, prev_cell},
      [gates, prev_cell, act = std::move(act), cells = std::move(cell_values), h](Tape& t, const Tensor& grad) {
        const Tensor& c_prev = prev_cell.value();
        const bool need_g = t.requires_grad(gates);
        const bool need_c = t.requires_grad(prev_cell);
        std::span<double> gg = need_g ? t.grad(gates) : std::span<double>{};
        std::span<double> gc = need_c ? t.grad(prev_cell) : std::span<double>{};
        for (std::size_t j = 0; j < h; ++j) {
          const double i = act[j], f = act[h + j], o = act[2 * h + j], u = act[3 * h + j];
          const double tc = std::tanh(cells[j]);
          const double dh = grad[j];
          const double dc = grad[h + j] + dh * o * (1.0 - tc * tc);
          if (need_g) {
            gg[j] += dc * u * i * (1.0 - i);
            gg[h + j] += dc * c_prev[j] * f * (1.0 - f);
            gg[2 * h + j] += dh * tc * o * (1.0 - o);
            gg[3 * h + j] += dc * i * (1.0 - u * u);
          }
          if (need_c) gc[j] += dc * f;
        }
      });
  return {slice(hc, 0, h), slice(hc, h, h)};
}

LstmState lstm_step(const LstmVars& weights, Var input, const LstmState& prev) {
  Var gates = add(add(matmul(input, weights.input_w), matmul(prev.h, weights.hidden_w)), weights.bias);
  return lstm_cell(gates, prev.c);
}

RegionContext make_region_context(const GeneratorVars& gen, Var region_map) {
  RegionContext ctx;
  ctx.regions = region_map;
  ctx.mean = mean_pool_columns(region_map);
  ctx.projected = matmul(region_map, gen.att_region);
  return ctx;
}

Var step_paragraph_lstm(GeneratorState& state, const RegionContext& regions, TokenId prev_word,
                        const GeneratorVars& gen) {
  if (prev_word >= gen.dims.vocab_size) {
    throw Error("step_paragraph_lstm: word id " + std::to_string(prev_word) + " outside vocabulary of " +
                std::to_string(gen.dims.vocab_size));
  }
  Var word = row(gen.word_embed, prev_word);
  Var input = concat({state.sentence.h, regions.mean, word});
  state.paragraph = lstm_step(gen.paragraph, input, state.paragraph);
  return state.paragraph.h;
}

Var project_topic(Var topic, const GeneratorVars& gen) { return matmul(topic, gen.att_topic); }

Attention attend(const RegionContext& regions, Var paragraph_hidden, Var topic_projection, const GeneratorVars& gen,
                 const StepOptions& options) {
  Var query = add(matmul(paragraph_hidden, gen.att_hidden), topic_projection);
  Var hidden = tanh(add_row(regions.projected, query));
  if (options.training && options.dropout > 0.0) {
    if (!options.rng) throw Error("attend: dropout needs an rng");
    hidden = dropout(hidden, options.dropout, *options.rng);
  }
  Var logits = matmul(hidden, gen.att_w);
  Var weights = softmax(logits);
  return {weights, matmul(weights, regions.regions)};
}

Var step_sentence_lstm(GeneratorState& state, Var attended, Var topic, Var paragraph_hidden, const GeneratorVars& gen,
                       const StepOptions& options) {
  Var input = concat({attended, topic, paragraph_hidden});
  state.sentence = lstm_step(gen.sentence, input, state.sentence);
  ++state.time_index;
  Var h = state.sentence.h;
  if (options.training && options.dropout > 0.0) {
    if (!options.rng) throw Error("step_sentence_lstm: dropout needs an rng");
    h = dropout(h, options.dropout, *options.rng);
  }
  return add(matmul(h, gen.out_w), gen.out_b);
}

}  // namespace topicpara
