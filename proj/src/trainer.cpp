#include "topicpara/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "topicpara/error.hpp"
#include "topicpara/evaluate.hpp"
#include "topicpara/ops.hpp"

namespace topicpara {

namespace {

RewardBundle reward_of(const Checkpoint& c, const Paragraph& generated, const Tokens& gold, const CiderD& cider) {
  RewardBundle r = combined_reward(flatten_tokens(generated, c.vocab), gold, c.lexicon, cider, c.config.beta);
  if (c.config.cider_weight != 1.0) r.combined = c.config.beta * r.coverage + c.config.cider_weight * r.cider;
  return r;
}

}  // namespace

std::vector<Example> make_examples(const std::vector<std::string>& ids, const std::vector<DatasetRecord>& records,
                                   const FeatureMap& features, const Vocabulary& vocab, const ModelDims& dims) {
  std::map<std::string, const DatasetRecord*> by_id;
  for (const auto& r : records) by_id[r.image_id] = &r;
  std::vector<Example> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto rec = by_id.find(id);
    if (rec == by_id.end()) throw Error("no paragraph for image '" + id + "'");
    auto feat = features.find(id);
    if (feat == features.end()) throw Error("missing features for image '" + id + "'");
    Example e;
    e.regions = &feat->second;
    e.gold = encode_paragraph(tokenize(rec->second->paragraph, dims.topics, dims.max_words), vocab);
    out.push_back(std::move(e));
  }
  return out;
}

CiderD make_cider(std::span<const Example> examples, const Vocabulary& vocab) {
  std::vector<std::vector<Tokens>> refs;
  refs.reserve(examples.size());
  for (const Example& e : examples) refs.push_back({flatten_tokens(e.gold, vocab)});
  return CiderD(refs);
}

namespace {

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  return idx;
}

std::vector<Example> gather(const std::vector<Example>& all, std::span<const std::size_t> idx) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

PhaseOneReport phase_one_step(Checkpoint& c, std::span<const Example> batch) {
  Tape tape;
  const ModelVars vars = bind(tape, c.model);
  StepOptions options{true, c.config.dropout, &c.state.rng};
  PhaseOneReport report;
  try {
    PhaseOneLoss loss = phase_one_loss(vars, batch, c.config.lambda_rec, c.config.lambda_stop, options, Mode::train);
    c.model.zero_grad();
    tape.backward(loss.total);
    c.optimizer.set_lr(c.config.lr_phase1);
    c.optimizer.step(c.model.parameters());
    update_running_stats(c.model.cae, loss.embedded);
    report = {loss.total.value()[0], loss.word, loss.reconstruction, loss.stop, loss.tokens};
  } catch (const NumericError& e) {
    throw NumericError("phase 1 diverged at step " + std::to_string(c.state.step + 1) + ": " + e.what());
  }
  ++c.state.step;
  return report;
}

void begin_phase_two(Checkpoint& c) {
  c.state.phase = 2;
  c.state.step = 0;
  c.state.epoch = 0;
  c.state.best_score = -1.0;
  c.state.epochs_since_best = 0;
  c.optimizer = Adam(AdamOptions{c.config.lr_phase2});
}

PhaseTwoReport phase_two_step(Checkpoint& c, std::span<const Example> batch, const CiderD& cider) {
  if (batch.empty()) throw Error("phase_two_step: empty batch");
  PhaseTwoReport report;
  Tape tape;
  const ModelVars vars = bind(tape, c.model);
  std::vector<Var> losses;
  try {
    for (const Example& e : batch) {
      const Tokens gold = flatten_tokens(e.gold, c.vocab);
      const ImageOutput greedy = generate_paragraph(c.model, *e.regions, c.config.block_trigrams);
      const RewardBundle base = reward_of(c, greedy.paragraph, gold, cider);

      Var v = embed_regions(vars.cae, *e.regions);
      DecodeOptions options;
      options.mode = DecodeMode::sample;
      options.rng = &c.state.rng;
      options.step = StepOptions{true, c.config.dropout, &c.state.rng};
      DecodeResult sample = decode_paragraph(vars, v, options);
      const RewardBundle r = reward_of(c, sample.paragraph, gold, cider);
      losses.push_back(scst_loss(sample.log_prob, r.combined, base.combined));
      report.sample_reward += r.combined;
      report.greedy_reward += base.combined;
    }
    const double n = static_cast<double>(batch.size());
    Var total = scale(sum(concat(losses)), 1.0 / n);
    c.model.zero_grad();
    tape.backward(total);
    c.optimizer.set_lr(c.config.lr_phase2);
    c.optimizer.step(c.model.parameters());
    report.loss = total.value()[0];
    report.sample_reward /= n;
    report.greedy_reward /= n;
  } catch (const NumericError& e) {
    throw NumericError("phase 2 diverged at step " + std::to_string(c.state.step + 1) + ": " + e.what());
  }
  ++c.state.step;
  return report;
}

RewardSummary mean_greedy_reward(const Checkpoint& c, std::span<const Example> examples, const CiderD& cider) {
  RewardSummary s;
  if (examples.empty()) return s;
  for (const Example& e : examples) {
    const ImageOutput out = generate_paragraph(c.model, *e.regions, c.config.block_trigrams);
    const RewardBundle r = reward_of(c, out.paragraph, flatten_tokens(e.gold, c.vocab), cider);
    s.combined += r.combined;
    s.coverage += r.coverage;
    s.cider += r.cider;
  }
  const double n = static_cast<double>(examples.size());
  s.combined /= n;
  s.coverage /= n;
  s.cider /= n;
  return s;
}

namespace {

// Shared epoch loop. `step` runs one update; `score` rates the model after an
// epoch (higher is better).
template <class Step, class Score>
Checkpoint run_epochs(Checkpoint& c, const TrainingData& data, std::size_t epochs, std::size_t max_steps,
                      Step step, Score score, const char* phase, const TrainLog& log) {
  if (data.train.empty()) throw Error(std::string(phase) + ": no training examples");
  Checkpoint best = c;
  const std::size_t bs = c.config.batch_size;
  bool done = false;
  while (!done && c.state.epoch < epochs) {
    const std::vector<std::size_t> order = shuffled_indices(data.train.size(), c.state.rng);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t count = std::min(bs, order.size() - start);
      const std::vector<Example> batch = gather(data.train, std::span(order).subspan(start, count));
      const std::string line = step(batch);
      if (log && (c.state.step % 10 == 0)) log(format("%s step %llu %s", phase, (unsigned long long)c.state.step, line.c_str()));
      if (max_steps != 0 && c.state.step >= max_steps) {
        done = true;
        break;
      }
    }
    ++c.state.epoch;
    if (data.val.empty()) {
      best = c;
      continue;
    }
    const double s = score();
    if (log) log(format("%s epoch %llu validation %.6f", phase, (unsigned long long)c.state.epoch, s));
    if (s > c.state.best_score) {
      c.state.best_score = s;
      c.state.epochs_since_best = 0;
      best = c;
    } else if (++c.state.epochs_since_best >= c.config.patience) {
      if (log) log(format("%s early stop after %llu epochs without gain", phase,
                          (unsigned long long)c.state.epochs_since_best));
      break;
    }
  }
  return best;
}

}  // namespace

Checkpoint train_phase_one(Checkpoint& c, const TrainingData& data, const TrainLog& log) {
  if (c.state.phase != 1) throw Error("train_phase_one: checkpoint is in phase " + std::to_string(c.state.phase));
  return run_epochs(
      c, data, c.config.epochs_phase1, c.config.max_steps_phase1,
      [&](const std::vector<Example>& batch) {
        const PhaseOneReport r = phase_one_step(c, batch);
        return format("loss %.6f xe/token %.6f", r.loss, r.word / static_cast<double>(r.tokens));
      },
      [&] { return evaluate(c.model, c.vocab, c.lexicon, data.val, c.config.block_trigrams).cider; }, "phase1", log);
}

Checkpoint train_phase_two(Checkpoint& c, const TrainingData& data, const TrainLog& log) {
  if (c.state.phase != 2) begin_phase_two(c);
  const CiderD cider = make_cider(data.train, c.vocab);
  return run_epochs(
      c, data, c.config.epochs_phase2, c.config.max_steps_phase2,
      [&](const std::vector<Example>& batch) {
        const PhaseTwoReport r = phase_two_step(c, batch, cider);
        return format("loss %.6f sample R %.4f greedy R %.4f", r.loss, r.sample_reward, r.greedy_reward);
      },
      [&] { return mean_greedy_reward(c, data.val, cider).combined; }, "phase2", log);
}

}  // namespace topicpara
