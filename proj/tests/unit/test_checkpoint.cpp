#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "training_fixture.hpp"
#include "topicpara/error.hpp"

using namespace topicpara;
using namespace topicpara::testing::fixture;

namespace {

// Every synthetic object word makes the vocabulary, so the lexicon is never empty.
TrainConfig corpus_config() {
  TrainConfig c = desk_config();
  c.min_count = 1;
  return c;
}

}  // namespace

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("topicpara_test_" + name);
}

std::string bytes_of(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

std::string serialized(const Checkpoint& c, const std::string& name) {
  const auto path = temp_file(name);
  save_checkpoint(path, c);
  std::string b = bytes_of(path);
  std::filesystem::remove(path);
  return b;
}

}  // namespace

class CheckpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthOptions synth = desk_synth(16);
    synth.test_fraction = 0.0;
    ckpt = make_corpus(corpus, synth, 3, corpus_config());
    ckpt.config.dropout = 0.3;
    for (int i = 0; i < 3; ++i) phase_one_step(ckpt, corpus.data.train);
  }
  Corpus corpus;
  Checkpoint ckpt;
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  const auto path = temp_file("ckpt_a.bin");
  save_checkpoint(path, ckpt);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.vocab, ckpt.vocab);
  EXPECT_EQ(back.lexicon, ckpt.lexicon);
  EXPECT_EQ(back.state, ckpt.state);
  EXPECT_EQ(back.optimizer, ckpt.optimizer);
  EXPECT_EQ(to_json(back.config), to_json(ckpt.config));
  const auto a = ckpt.model.parameters();
  const auto b = back.model.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i]->name, b[i]->name);
    EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
  }
  EXPECT_EQ(back.model.cae.bn_running_mean, ckpt.model.cae.bn_running_mean);
  EXPECT_EQ(back.model.cae.bn_running_var, ckpt.model.cae.bn_running_var);
  EXPECT_EQ(serialized(back, "ckpt_b.bin"), bytes_of(path));
  std::filesystem::remove(path);
}

TEST_F(CheckpointTest, ResumedStepsMatchUninterrupted) {
  const auto path = temp_file("ckpt_resume.bin");
  save_checkpoint(path, ckpt);
  Checkpoint resumed = load_checkpoint(path);
  std::filesystem::remove(path);
  phase_one_step(ckpt, corpus.data.train);
  phase_one_step(resumed, corpus.data.train);
  EXPECT_EQ(serialized(ckpt, "ckpt_c.bin"), serialized(resumed, "ckpt_d.bin"));

  const CiderD cider = make_cider(corpus.data.train, ckpt.vocab);
  begin_phase_two(ckpt);
  begin_phase_two(resumed);
  const auto first = std::span(corpus.data.train).first(4);
  const PhaseTwoReport x = phase_two_step(ckpt, first, cider);
  const PhaseTwoReport y = phase_two_step(resumed, first, cider);
  EXPECT_EQ(x.loss, y.loss);
  EXPECT_EQ(serialized(ckpt, "ckpt_e.bin"), serialized(resumed, "ckpt_f.bin"));
}

TEST_F(CheckpointTest, CorruptFilesRejected) {
  const auto path = temp_file("ckpt_bad.bin");
  save_checkpoint(path, ckpt);
  const std::string good = bytes_of(path);

  std::string bad = good;
  bad[0] = 'X';
  write_bytes(path, bad);
  EXPECT_THROW(load_checkpoint(path), FormatError);

  write_bytes(path, good + "x");
  EXPECT_THROW(load_checkpoint(path), FormatError);

  write_bytes(path, good.substr(0, good.size() - 9));
  EXPECT_THROW(load_checkpoint(path), FormatError);

  write_bytes(path, good.substr(0, 30));
  EXPECT_THROW(load_checkpoint(path), FormatError);

  bad = good;
  bad[8] = 7;  // version
  write_bytes(path, bad);
  EXPECT_THROW(load_checkpoint(path), FormatError);

  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), Error);
}
