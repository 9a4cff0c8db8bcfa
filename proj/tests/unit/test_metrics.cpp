#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "topicpara/error.hpp"
#include "topicpara/metrics.hpp"
#include "topicpara/rng.hpp"

using namespace topicpara;

namespace {

Tokens split(const std::string& s) {
  Tokens out;
  std::string w;
  for (char ch : s) {
    if (ch == ' ') {
      if (!w.empty()) out.push_back(w);
      w.clear();
    } else {
      w += ch;
    }
  }
  if (!w.empty()) out.push_back(w);
  return out;
}

struct Corpus {
  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
  std::vector<double> cider;
  double cider_mean;
  double bleu4;
};

std::vector<Corpus> load_fixture() {
  std::ifstream in(std::string(TOPICPARA_TEST_DATA_DIR) + "/metric_oracle.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  std::vector<Corpus> out;
  for (const auto& c : j.at("corpora")) {
    out.push_back({c.at("candidates").get<std::vector<Tokens>>(),
                   c.at("references").get<std::vector<std::vector<Tokens>>>(), c.at("cider").get<std::vector<double>>(),
                   c.at("cider_mean").get<double>(), c.at("bleu4").get<double>()});
  }
  return out;
}

}  // namespace

TEST(Ngrams, Counts) {
  const NgramStats s = count_ngrams(split("a b a b"), 4);
  EXPECT_EQ(s.length, 4u);
  EXPECT_EQ(s.counts[0].at("a"), 2u);
  EXPECT_EQ(s.counts[1].at("a b"), 2u);
  EXPECT_EQ(s.counts[1].at("b a"), 1u);
  EXPECT_EQ(s.counts[3].at("a b a b"), 1u);
  EXPECT_EQ(s.counts[3].size(), 1u);
}

TEST(Metrics, MatchReferenceImplementationOnFixture) {
  const auto corpora = load_fixture();
  ASSERT_EQ(corpora.size(), 50u);
  for (const auto& c : corpora) {
    const CiderD scorer(c.references);
    const auto got = scorer.score_all(c.candidates, c.references);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], c.cider[i], 1e-6);
    EXPECT_NEAR(cider_d_corpus(c.candidates, c.references), c.cider_mean, 1e-6);
    EXPECT_NEAR(bleu4(c.candidates, c.references), c.bleu4, 1e-6);
  }
}

TEST(Metrics, IdenticalCandidateScoresHighest) {
  for (const auto& c : load_fixture()) {
    const CiderD scorer(c.references);
    for (std::size_t i = 0; i < c.references.size(); ++i) {
      if (c.references[i].size() != 1) continue;
      const double self = scorer.score(c.references[i][0], c.references[i]);
      for (const auto& other : c.candidates) EXPECT_GE(self + 1e-12, scorer.score(other, c.references[i]));
    }
  }
}

TEST(Metrics, ReferenceOrderInvariance) {
  RngStream rng(1);
  for (const auto& c : load_fixture()) {
    auto shuffled = c.references;
    for (auto& refs : shuffled) {
      for (std::size_t i = refs.size(); i > 1; --i) std::swap(refs[i - 1], refs[rng.uniform_index(i)]);
    }
    const CiderD a(c.references), b(shuffled);
    const auto sa = a.score_all(c.candidates, c.references), sb = b.score_all(c.candidates, shuffled);
    for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_NEAR(sa[i], sb[i], 1e-12);
    EXPECT_NEAR(bleu4(c.candidates, c.references), bleu4(c.candidates, shuffled), 1e-12);
  }
}

TEST(Metrics, PureFunctions) {
  const auto corpora = load_fixture();
  const auto& c = corpora[3];
  EXPECT_EQ(cider_d_corpus(c.candidates, c.references), cider_d_corpus(c.candidates, c.references));
  EXPECT_EQ(bleu4(c.candidates, c.references), bleu4(c.candidates, c.references));
}

TEST(CiderD, ZeroOverlapIsZero) {
  const std::vector<std::vector<Tokens>> refs = {{split("a b c d")}, {split("e f g")}};
  const CiderD scorer(refs);
  EXPECT_EQ(scorer.score(split("x y z"), refs[0]), 0.0);
  EXPECT_EQ(scorer.score({}, refs[0]), 0.0);
  EXPECT_THROW(scorer.score(split("a"), {}), Error);
}

TEST(CiderD, DocumentFrequencyCountsImagesOnce) {
  const std::vector<std::vector<Tokens>> refs = {{split("a b"), split("a c")}, {split("a d")}, {split("e")}};
  const CiderD scorer(refs);
  EXPECT_EQ(scorer.document_count(), 3u);
  EXPECT_EQ(scorer.document_frequency("a"), 2.0);
  EXPECT_EQ(scorer.document_frequency("a b"), 1.0);
  EXPECT_EQ(scorer.document_frequency("zzz"), 0.0);
}

TEST(Bleu, Examples) {
  EXPECT_NEAR(bleu4(split("a b c d e"), {split("a b c d e")}), 1.0, 1e-9);
  EXPECT_NEAR(bleu4(split("x y z w"), {split("a b c d")}), 0.0, 1e-9);
}

TEST(Bleu, HandComputedClippedPrecisions) {
  // unigrams 5/6, bigrams 3/5, trigrams 1/4, 4-grams 0/3; the smoothed length ratio
  // (6 + tiny) / (6 + small) sits just below 1, so a near-unit brevity penalty applies
  const double tiny = 1e-15, small = 1e-9;
  const double bp = std::exp(1.0 - (6 + small) / (6 + tiny));
  const double expected = bp * std::pow((5 + tiny) / (6 + small) * (3 + tiny) / (5 + small) * (1 + tiny) / (4 + small) *
                                       (0 + tiny) / (3 + small),
                                   0.25);
  EXPECT_NEAR(bleu4(split("the cat sat on the mat"), {split("the cat is on the mat")}), expected, 1e-15);
}

TEST(Bleu, BrevityPenaltyUsesClosestReference) {
  // candidate of 4 tokens, references of 6 and 9: closest is 6
  const Tokens cand = split("a b c d");
  const double with_bp = bleu4(cand, {split("a b c d x y"), split("a b c d x y z w v")});
  const double bp = std::exp(1.0 - 6.0 / 4.0);
  EXPECT_NEAR(with_bp, bp * bleu4(cand, {split("a b c d")}), 1e-9);
}
