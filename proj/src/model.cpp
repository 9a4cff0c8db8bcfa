#include "topicpara/model.hpp"

#include <cmath>

#include "topicpara/error.hpp"
#include "topicpara/ops.hpp"
#include "topicpara/trigram.hpp"

namespace topicpara {

Model Model::create(const ModelDims& dims, RngStream& rng, bool batch_norm) {
  dims.validate();
  Model m;
  m.dims = dims;
  m.cae = CaeParams::create(dims, rng, batch_norm);
  m.gen = GeneratorParams::create(dims, rng);
  require_unique_names(m.parameters());
  return m;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out = cae.parameters();
  for (Parameter* p : gen.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out = cae.parameters();
  for (const Parameter* p : gen.parameters()) out.push_back(p);
  return out;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

ModelVars bind(Tape& tape, Model& model) {
  return {bind(tape, model.dims, model.cae), bind(tape, model.dims, model.gen)};
}

ModelVars bind(Tape& tape, const Model& model) {
  return {bind(tape, model.dims, model.cae), bind(tape, model.dims, model.gen)};
}

namespace {

// Softmax over the logits with never-emitted words at probability 0.
std::vector<double> emission_distribution(const Tensor& logits) {
  std::vector<double> p(logits.size(), 0.0);
  double mx = -INFINITY;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i == kPad || i == kBos) continue;
    mx = std::max(mx, logits[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (i == kPad || i == kBos) continue;
    p[i] = std::exp(logits[i] - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

TokenId argmax_lowest(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

TeacherForcedLoss teacher_forced(const ModelVars& model, const RegionContext& ctx, const TopicSet& topics,
                                 const Paragraph& gold, const StepOptions& options) {
  const ModelDims& dims = model.gen.dims;
  const std::size_t k_gold = gold.sentences.size();
  if (k_gold == 0) throw Error("teacher_forced_nll: empty paragraph");
  if (k_gold > dims.topics) {
    throw Error("teacher_forced_nll: " + std::to_string(k_gold) + " sentences exceed K = " +
                std::to_string(dims.topics));
  }
  Tape& tape = *ctx.regions.tape();
  std::vector<Var> word_terms;
  std::vector<Var> stop_terms;
  TeacherForcedLoss out;
  GeneratorState state = begin_paragraph(tape, dims);
  for (std::size_t k = 0; k < k_gold; ++k) {
    const auto& sentence = gold.sentences[k];
    if (sentence.size() > dims.max_words) {
      throw Error("teacher_forced_nll: sentence of " + std::to_string(sentence.size()) + " words exceeds T_max");
    }
    std::vector<TokenId> targets = sentence;
    if (targets.size() < dims.max_words) targets.push_back(kEos);
    begin_sentence(state, tape, dims, k);
    Var topic = row(topics.topics, k);
    Var topic_proj = project_topic(topic, model.gen);
    TokenId prev = kBos;
    for (TokenId target : targets) {
      if (target == kPad || target >= dims.vocab_size) {
        throw Error("teacher_forced_nll: invalid gold token " + std::to_string(target));
      }
      Var h_p = step_paragraph_lstm(state, ctx, prev, model.gen);
      Attention att = attend(ctx, h_p, topic_proj, model.gen, options);
      Var logits = step_sentence_lstm(state, att.attended, topic, h_p, model.gen, options);
      word_terms.push_back(log_prob_of(logits, target));
      prev = target;
    }
    out.tokens += targets.size();
    const std::size_t label = (k + 1 == k_gold) ? kStop : kContinue;
    stop_terms.push_back(log_prob_of(row(topics.stop_logits, k), label));
  }
  out.word_loss = scale(sum(concat(word_terms)), -1.0);
  out.stop_loss = scale(sum(concat(stop_terms)), -1.0);
  return out;
}

}  // namespace

DecodeResult decode_paragraph(const ModelVars& model, Var region_map, const DecodeOptions& options) {
  const ModelDims& dims = model.gen.dims;
  const bool sampling = options.mode == DecodeMode::sample;
  if (sampling && !options.rng) throw Error("decode_paragraph: sampling needs an rng");
  const std::size_t k_max =
      options.max_sentences == 0 ? dims.topics : std::min(options.max_sentences, dims.topics);
  Tape& tape = *region_map.tape();

  TopicSet topics = encode_topics(model.cae, region_map);
  RegionContext ctx = make_region_context(model.gen, region_map);
  DecodeResult result;
  result.topics = topics.topics.value();
  result.stop_probs = predict_stop(topics.stop_logits.value());

  std::vector<Var> log_terms;
  std::vector<TokenId> history;  // paragraph so far, sentences closed by EOS
  GeneratorState state = begin_paragraph(tape, dims);
  for (std::size_t k = 0; k < k_max; ++k) {
    begin_sentence(state, tape, dims, k);
    Var topic = row(topics.topics, k);
    Var topic_proj = project_topic(topic, model.gen);
    std::vector<TokenId> sentence;
    if (options.record_attention) result.attention.emplace_back();
    TokenId prev = kBos;
    while (sentence.size() < dims.max_words) {
      const Tensor h_p_before = state.paragraph.h.value();
      const Tensor h_s_before = state.sentence.h.value();
      Var h_p = step_paragraph_lstm(state, ctx, prev, model.gen);
      Attention att = attend(ctx, h_p, topic_proj, model.gen, options.step);
      Var logits = step_sentence_lstm(state, att.attended, topic, h_p, model.gen, options.step);
      std::vector<double> dist = emission_distribution(logits.value());
      TokenId token;
      if (sampling) {
        token = static_cast<TokenId>(options.rng->categorical(dist));
        log_terms.push_back(log_prob_of(logits, token, kNeverEmitted));
      } else {
        if (options.block_trigrams) {
          std::vector<TokenId> prefix = history;
          prefix.insert(prefix.end(), sentence.begin(), sentence.end());
          if (block_repeated_trigram(prefix, dist).waived) result.trigram_waived = true;
        }
        token = argmax_lowest(dist);
      }
      if (options.record_attention) {
        const auto w = att.weights.value().values();
        result.attention.back().emplace_back(w.begin(), w.end());
      }
      if (options.observer) {
        options.observer(StepTrace{k, state.time_index - 1, h_p_before, h_s_before, att.weights.value(), token});
      }
      if (token == kEos) break;
      sentence.push_back(token);
      prev = token;
    }
    history.insert(history.end(), sentence.begin(), sentence.end());
    history.push_back(kEos);
    result.paragraph.sentences.push_back(std::move(sentence));

    if (k + 1 == k_max) break;
    const double p_stop = result.stop_probs[k];
    bool stop;
    if (sampling) {
      stop = options.rng->bernoulli(p_stop);
      log_terms.push_back(log_prob_of(row(topics.stop_logits, k), stop ? kStop : kContinue));
    } else {
      stop = p_stop > 0.5;
    }
    if (stop) break;
  }
  if (sampling) result.log_prob = sum(concat(log_terms));
  return result;
}

TeacherForcedLoss teacher_forced_nll(const ModelVars& model, Var region_map, const Paragraph& gold,
                                     const StepOptions& options) {
  TopicSet topics = encode_topics(model.cae, region_map);
  RegionContext ctx = make_region_context(model.gen, region_map);
  return teacher_forced(model, ctx, topics, gold, options);
}

PhaseOneLoss phase_one_loss(const ModelVars& model, std::span<const Example> batch, double lambda_rec,
                            double lambda_stop, const StepOptions& options, Mode mode) {
  if (batch.empty()) throw Error("phase_one_loss: empty batch");
  std::vector<const RawRegionSet*> regions;
  for (const Example& e : batch) {
    if (!e.regions) throw Error("phase_one_loss: example without regions");
    regions.push_back(e.regions);
  }
  PhaseOneLoss out;
  out.embedded = embed_regions(model.cae, regions, mode);
  std::vector<Var> terms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Var v = out.embedded.maps[i];
    TopicSet topics = encode_topics(model.cae, v);
    RegionContext ctx = make_region_context(model.gen, v);
    TeacherForcedLoss tf = teacher_forced(model, ctx, topics, batch[i].gold, options);
    Var rec = reconstruction_loss(reconstruct(model.cae, topics.topics), v);
    out.word += tf.word_loss.value()[0];
    out.stop += tf.stop_loss.value()[0];
    out.reconstruction += rec.value()[0];
    out.tokens += tf.tokens;
    terms.push_back(add(add(tf.word_loss, scale(rec, lambda_rec)), scale(tf.stop_loss, lambda_stop)));
  }
  out.total = scale(sum(concat(terms)), 1.0 / static_cast<double>(batch.size()));
  return out;
}

}  // namespace topicpara
