#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "topicpara/checkpoint.hpp"
#include "topicpara/config.hpp"

using namespace topicpara;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "topicpara");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string bytes_of(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / ("topicpara_cli_test_" + std::to_string(std::random_device{}()));
    fs::remove_all(dir);
    const CliRun r = run({"synth-data", "--out", dir.string(), "--seed", "3", "--images", "20", "--regions", "8",
                       "--raw-dim", "16"});
    ASSERT_EQ(r.code, 0) << r.err;
    TrainConfig c;
    c.dims.regions = 8;
    c.dims.raw_dim = 16;
    c.dims.embed_dim = 24;
    c.dims.filter_width = 4;
    c.dims.stride = 2;
    c.dims.hidden = 16;
    c.dims.attention_dim = 8;
    c.dims.word_dim = 8;
    c.min_count = 1;
    c.epochs_phase1 = 1;
    c.epochs_phase2 = 1;
    c.max_steps_phase1 = 2;
    c.max_steps_phase2 = 1;
    save_config(dir / "config.json", c);
  }
  static void TearDownTestSuite() { fs::remove_all(dir); }

  static std::string data() { return dir.string(); }
  static inline fs::path dir;
};

TEST_F(CliTest, SynthDataWritesAllFiles) {
  for (const char* f : {"dataset.jsonl", "features.bin", "splits.json", "lexicon.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  const CliRun r = run({"train", "--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train", "--data", data(), "--phase", "3", "--out", "x"}).code, 2);
}

TEST_F(CliTest, HelpSucceeds) {
  const CliRun r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("generate"), std::string::npos);
}

TEST_F(CliTest, BuildVocabWritesVocabularyAndLexicon) {
  const CliRun r = run({"build-vocab", "--data", data(), "--min-count", "2", "--out", (dir / "vocab.txt").string(),
                     "--lexicon-out", (dir / "ranked.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::file_size(dir / "vocab.txt") > 0);
  EXPECT_TRUE(fs::file_size(dir / "ranked.txt") > 0);
}

TEST_F(CliTest, TrainingWithSameSeedIsReproducible) {
  const auto a = dir / "a.ckpt", b = dir / "b.ckpt", c = dir / "c.ckpt";
  const std::string config = (dir / "config.json").string();
  CliRun r = run({"train", "--data", data(), "--config", config, "--seed", "7", "--phase", "1", "--out", a.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("seed: 7"), std::string::npos);
  r = run({"train", "--data", data(), "--config", config, "--seed", "7", "--phase", "1", "--out", b.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(bytes_of(a), bytes_of(b));
  r = run({"train", "--data", data(), "--config", config, "--seed", "8", "--phase", "1", "--out", c.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(bytes_of(a), bytes_of(c));
  EXPECT_EQ(load_checkpoint(a).config.seed, 7u);
}

TEST_F(CliTest, PhaseTwoContinuesFromCheckpoint) {
  const auto p1 = dir / "p1.ckpt", p2 = dir / "p2.ckpt";
  const std::string config = (dir / "config.json").string();
  ASSERT_EQ(run({"train", "--data", data(), "--config", config, "--out", p1.string()}).code, 0);
  EXPECT_EQ(run({"train", "--data", data(), "--phase", "2", "--out", p2.string()}).code, 1);
  EXPECT_EQ(run({"train", "--data", data(), "--phase", "2", "--init", p1.string(), "--seed", "3", "--out",
                 p2.string()})
                .code,
            1);
  const CliRun r = run({"train", "--data", data(), "--phase", "2", "--init", p1.string(), "--out", p2.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(load_checkpoint(p2).state.phase, 2);
}

TEST_F(CliTest, GenerateEvaluateAndInspect) {
  const auto ck = dir / "g.ckpt";
  ASSERT_EQ(run({"train", "--data", data(), "--config", (dir / "config.json").string(), "--phase", "1", "--out",
                 ck.string()})
                .code,
            0);
  const auto splits = nlohmann::json::parse(bytes_of(dir / "splits.json"));
  const std::string id = splits["val"][0];

  CliRun r = run({"generate", "--data", data(), "--checkpoint", ck.string(), "--image", id, "--greedy"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  std::vector<nlohmann::json> parsed;
  while (std::getline(lines, line)) parsed.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(parsed.size(), 1u);
  EXPECT_EQ(parsed[0]["image_id"], id);
  EXPECT_EQ(parsed[0]["stop_probs"].size(), 6u);
  EXPECT_EQ(run({"generate", "--data", data(), "--checkpoint", ck.string(), "--image", id}).out, r.out);

  r = run({"generate", "--data", data(), "--checkpoint", ck.string(), "--split", "val", "--sample", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), static_cast<long>(splits["val"].size()));

  r = run({"evaluate", "--data", data(), "--checkpoint", ck.string(), "--split", "val", "--dump"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  EXPECT_TRUE(report.contains("CIDEr"));
  EXPECT_EQ(report["outputs"].size(), splits["val"].size());

  r = run({"inspect-topics", "--data", data(), "--checkpoint", ck.string(), "--image", id});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto topics = nlohmann::json::parse(r.out);
  EXPECT_EQ(topics["topics"].size(), 6u);
  EXPECT_EQ(topics["attention"].size(), topics["sentences"].size());

  r = run({"generate", "--data", data(), "--checkpoint", ck.string(), "--image", "no-such-image"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("no-such-image"), std::string::npos);
}

TEST_F(CliTest, MissingFilesAreRuntimeErrors) {
  const CliRun r = run({"evaluate", "--data", (dir / "missing").string(), "--checkpoint", (dir / "none.ckpt").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}
