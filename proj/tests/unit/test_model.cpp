#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "test_support.hpp"
#include "topicpara/error.hpp"
#include "topicpara/gradcheck.hpp"
#include "topicpara/model.hpp"
#include "topicpara/ops.hpp"
#include "topicpara/trigram.hpp"

using namespace topicpara;
using topicpara::testing::random_regions;
using topicpara::testing::toy_dims;

namespace {

DecodeResult greedy(const Model& model, const RawRegionSet& raw, DecodeOptions options = {}) {
  Tape t(false);
  const ModelVars vars = bind(t, model);
  return decode_paragraph(vars, embed_regions(vars.cae, raw), options);
}

std::vector<TokenId> words(RngStream& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<TokenId>(kSpecialCount + rng.uniform_index(vocab - kSpecialCount)));
  return s;
}

}  // namespace

TEST(Decode, ForcedSingleSentence) {
  ModelDims dims = toy_dims(30);
  dims.topics = 1;
  RngStream rng(1);
  const Model model = Model::create(dims, rng);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(greedy(model, random_regions("a", dims, rng)).paragraph.sentences.size(), 1u);
  ModelDims wide = toy_dims(30);
  const Model m6 = Model::create(wide, rng);
  DecodeOptions o;
  o.max_sentences = 1;
  EXPECT_EQ(greedy(m6, random_regions("a", wide, rng), o).paragraph.sentences.size(), 1u);
}

TEST(Decode, GreedyIsDeterministic) {
  const ModelDims dims = toy_dims(30);
  RngStream rng(2);
  const Model model = Model::create(dims, rng);
  const RawRegionSet raw = random_regions("a", dims, rng);
  const DecodeResult a = greedy(model, raw), b = greedy(model, raw);
  EXPECT_EQ(a.paragraph, b.paragraph);
  EXPECT_EQ(a.stop_probs, b.stop_probs);
}

TEST(Decode, CapsTokensAndTermination) {
  RngStream rng(3);
  for (std::size_t t_max : {3u, 20u}) {
    ModelDims dims = toy_dims(25);
    dims.topics = 6;
    dims.max_words = t_max;
    for (int m = 0; m < 5; ++m) {
      const Model model = Model::create(dims, rng);
      for (int i = 0; i < 20; ++i) {
        const RawRegionSet raw = random_regions("a", dims, rng);
        std::vector<std::vector<TokenId>> emitted(1);
        DecodeOptions o;
        o.observer = [&](const StepTrace& s) {
          if (s.sentence + 1 > emitted.size()) emitted.resize(s.sentence + 1);
          emitted[s.sentence].push_back(s.token);
        };
        const DecodeResult r = greedy(model, raw, o);
        ASSERT_GE(r.paragraph.sentences.size(), 1u);
        ASSERT_LE(r.paragraph.sentences.size(), dims.topics);
        ASSERT_FALSE(r.trigram_waived);
        ASSERT_FALSE(has_repeated_trigram(r.paragraph));
        for (std::size_t k = 0; k < r.paragraph.sentences.size(); ++k) {
          const auto& s = r.paragraph.sentences[k];
          ASSERT_LE(s.size(), t_max);
          for (TokenId tok : s) {
            ASSERT_LT(tok, dims.vocab_size);
            ASSERT_NE(tok, kPad);
            ASSERT_NE(tok, kBos);
            ASSERT_NE(tok, kEos);
          }
          // every sentence ends with EOS or at exactly T_max words
          ASSERT_TRUE(emitted[k].back() == kEos || s.size() == t_max);
        }
      }
    }
  }
}

TEST(Decode, StateResetAtSentenceStarts) {
  const ModelDims dims = toy_dims(25);
  RngStream rng(4);
  for (int m = 0; m < 5; ++m) {
    const Model model = Model::create(dims, rng);
    const RawRegionSet raw = random_regions("a", dims, rng);
    std::size_t steps = 0;
    DecodeOptions o;
    o.observer = [&](const StepTrace& s) {
      ++steps;
      const Tensor zero({dims.hidden});
      if (s.time == 0) EXPECT_EQ(s.sentence_h_before, zero) << "sentence " << s.sentence;
      else EXPECT_NE(s.sentence_h_before, zero);
      if (s.sentence == 0 && s.time == 0) EXPECT_EQ(s.paragraph_h_before, zero);
      else EXPECT_NE(s.paragraph_h_before, zero);
      double total = 0;
      for (double w : s.attention.values()) {
        EXPECT_GE(w, 0.0);
        total += w;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    };
    greedy(model, raw, o);
    EXPECT_GT(steps, 0u);
  }
}

TEST(Decode, AttendedFeatureInConvexHull) {
  const ModelDims dims = toy_dims(25);
  RngStream rng(5);
  const Model model = Model::create(dims, rng);
  Tape t(false);
  const ModelVars vars = bind(t, model);
  const RawRegionSet raw = random_regions("a", dims, rng);
  Var v = embed_regions(vars.cae, raw);
  const RegionContext ctx = make_region_context(vars.gen, v);
  GeneratorState s = begin_paragraph(t, dims);
  for (int step = 0; step < 10; ++step) {
    Var hp = step_paragraph_lstm(s, ctx, kBos, vars.gen);
    const TopicSet topics = encode_topics(vars.cae, v);
    const Attention a = attend(ctx, hp, project_topic(row(topics.topics, 0), vars.gen), vars.gen);
    for (std::size_t j = 0; j < dims.embed_dim; ++j) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t m = 0; m < dims.regions; ++m) {
        lo = std::min(lo, v.value().at(m, j));
        hi = std::max(hi, v.value().at(m, j));
      }
      EXPECT_GE(a.attended.value()[j], lo - 1e-12);
      EXPECT_LE(a.attended.value()[j], hi + 1e-12);
    }
  }
}

TEST(Decode, SampleModeLogProbAndDeterminism) {
  const ModelDims dims = toy_dims(25);
  RngStream rng(6);
  Model model = Model::create(dims, rng);
  const RawRegionSet raw = random_regions("a", dims, rng);
  auto run = [&](std::uint64_t seed) {
    Tape t;
    const ModelVars vars = bind(t, model);
    RngStream r(seed);
    DecodeOptions o;
    o.mode = DecodeMode::sample;
    o.rng = &r;
    DecodeResult res = decode_paragraph(vars, embed_regions(vars.cae, raw), o);
    return std::pair{res.paragraph, res.log_prob.value()[0]};
  };
  const auto a = run(9), b = run(9);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_LT(a.second, 0.0);
  Tape t;
  const ModelVars vars = bind(t, model);
  DecodeOptions o;
  o.mode = DecodeMode::sample;
  EXPECT_THROW(decode_paragraph(vars, embed_regions(vars.cae, raw), o), Error);
}

TEST(TeacherForcing, UniformModelGivesClosedForm) {
  const ModelDims dims = toy_dims(50);
  RngStream rng(7);
  Model model = Model::create(dims, rng);
  model.gen.out_w.value.fill(0);
  model.gen.out_b.value.fill(0);
  Paragraph gold;
  gold.sentences = {words(rng, 9, 50)};  // 9 words + EOS = 10 targets
  Tape t;
  const ModelVars vars = bind(t, model);
  const TeacherForcedLoss l = teacher_forced_nll(vars, embed_regions(vars.cae, random_regions("a", dims, rng)), gold);
  EXPECT_EQ(l.tokens, 10u);
  EXPECT_NEAR(l.word_loss.value()[0], 10 * std::log(50.0), 1e-12);
}

TEST(TeacherForcing, CertainModelGivesZero) {
  ModelDims dims = toy_dims(20);
  dims.max_words = 3;
  RngStream rng(8);
  Model model = Model::create(dims, rng);
  model.gen.out_w.value.fill(0);
  model.gen.out_b.value.fill(0);
  model.gen.out_b.value[7] = 1000;
  Paragraph gold;
  gold.sentences = {{7, 7, 7}, {7, 7, 7}};  // full-length sentences carry no EOS target
  Tape t;
  const ModelVars vars = bind(t, model);
  const TeacherForcedLoss l = teacher_forced_nll(vars, embed_regions(vars.cae, random_regions("a", dims, rng)), gold);
  EXPECT_EQ(l.tokens, 6u);
  EXPECT_EQ(l.word_loss.value()[0], 0.0);
}

TEST(TeacherForcing, InvalidGoldRejected) {
  const ModelDims dims = toy_dims(20);
  RngStream rng(9);
  const Model model = Model::create(dims, rng);
  Tape t;
  const ModelVars vars = bind(t, model);
  Var v = embed_regions(vars.cae, random_regions("a", dims, rng));
  EXPECT_THROW(teacher_forced_nll(vars, v, Paragraph{}), Error);
  EXPECT_THROW(teacher_forced_nll(vars, v, Paragraph{{{kPad}}}), Error);
  EXPECT_THROW(teacher_forced_nll(vars, v, Paragraph{{{4}, {4}, {4}, {4}}}), Error);
  EXPECT_THROW(teacher_forced_nll(vars, v, Paragraph{{std::vector<TokenId>(21, 4)}}), Error);
}

TEST(TeacherForcing, GradientCheckOnToyDims) {
  const ModelDims dims = toy_dims(20);
  RngStream rng(10);
  Model model = Model::create(dims, rng, false);
  const RawRegionSet raw = random_regions("a", dims, rng);
  const Paragraph gold{{words(rng, 3, 20), words(rng, 2, 20)}};
  const LossBuilder loss = [&](Tape& t) {
    const ModelVars vars = bind(t, model);
    const TeacherForcedLoss l = teacher_forced_nll(vars, embed_regions(vars.cae, raw), gold);
    return add(l.word_loss, l.stop_loss);
  };
  const GradCheckReport r = check_gradients(loss, model.parameters());
  EXPECT_TRUE(r.passed()) << r.worst.parameter << "[" << r.worst.index << "] " << r.worst.analytic << " vs "
                          << r.worst.numeric;
}

TEST(TeacherForcing, RegionPermutationInvariance) {
  const ModelDims dims = toy_dims(20);
  RngStream rng(11);
  const Model model = Model::create(dims, rng);
  const RawRegionSet raw = random_regions("a", dims, rng);
  RawRegionSet permuted = raw;
  for (std::size_t m = 0; m < dims.regions; ++m) {
    const std::size_t src = dims.regions - 1 - m;
    for (std::size_t d = 0; d < dims.raw_dim; ++d) permuted.features.at(m, d) = raw.features.at(src, d);
    permuted.objectness[m] = raw.objectness[src];
  }
  const Paragraph gold{{words(rng, 4, 20)}};
  auto loss = [&](const RawRegionSet& r) {
    Tape t(false);
    const ModelVars vars = bind(t, model);
    return teacher_forced_nll(vars, embed_regions(vars.cae, r), gold).word_loss.value()[0];
  };
  EXPECT_EQ(loss(raw), loss(permuted));
}

TEST(PhaseOne, ZeroReconstructionWeightLeavesDecoderUntouched) {
  const ModelDims dims = toy_dims(20);
  RngStream rng(12);
  Model model = Model::create(dims, rng);
  std::vector<RawRegionSet> raws = {random_regions("a", dims, rng), random_regions("b", dims, rng)};
  std::vector<Example> batch = {{&raws[0], Paragraph{{words(rng, 3, 20)}}},
                                {&raws[1], Paragraph{{words(rng, 4, 20), words(rng, 2, 20)}}}};
  Tape t;
  const ModelVars vars = bind(t, model);
  const PhaseOneLoss l = phase_one_loss(vars, batch, 0.0, 1.0);
  model.zero_grad();
  t.backward(l.total);
  EXPECT_EQ(model.cae.deconv_w.grad, Tensor(model.cae.deconv_w.value.shape()));
  EXPECT_EQ(model.cae.deconv_b.grad, Tensor(model.cae.deconv_b.value.shape()));
  EXPECT_NE(model.cae.conv_w.grad, Tensor(model.cae.conv_w.value.shape()));
  EXPECT_GT(l.reconstruction, 0.0);
  EXPECT_NEAR(l.total.value()[0], (l.word + l.stop) / 2.0, 1e-12);
}

TEST(PhaseOne, TotalCombinesTerms) {
  const ModelDims dims = toy_dims(20);
  RngStream rng(13);
  const Model model = Model::create(dims, rng);
  const RawRegionSet raw = random_regions("a", dims, rng);
  const std::vector<Example> batch = {{&raw, Paragraph{{words(rng, 3, 20)}}}};
  Tape t(false);
  const ModelVars vars = bind(t, model);
  const PhaseOneLoss l = phase_one_loss(vars, batch, 0.5, 2.0);
  EXPECT_NEAR(l.total.value()[0], l.word + 0.5 * l.reconstruction + 2.0 * l.stop, 1e-10);
  EXPECT_EQ(l.tokens, 4u);
  EXPECT_THROW(phase_one_loss(vars, std::span<const Example>{}, 1, 1), Error);
}

TEST(ModelParams, UniqueNamesAndCount) {
  const ModelDims dims = toy_dims(20);
  RngStream rng(14);
  Model model = Model::create(dims, rng);
  EXPECT_NO_THROW(require_unique_names(model.parameters()));
  EXPECT_EQ(model.parameters().size(), 23u);
}
