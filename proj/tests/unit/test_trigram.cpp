#include <gtest/gtest.h>

#include <vector>

#include "topicpara/trigram.hpp"

using namespace topicpara;

namespace {

constexpr TokenId a = 4, b = 5, c = 6, d = 7;

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

}  // namespace

TEST(Trigram, RepeatedTrigramCandidateBlocked) {
  // "a b a b": the next "a" would repeat "b a b"? no; it would complete "a b a" a second time
  const std::vector<TokenId> prefix = {a, b, a, b};
  std::vector<double> dist = uniform(8);
  const TrigramFilter f = block_repeated_trigram(prefix, dist);
  EXPECT_EQ(f.blocked, 1u);
  EXPECT_FALSE(f.waived);
  EXPECT_EQ(dist[a], 0.0);
  double total = 0;
  for (double p : dist) total += p;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_NEAR(dist[b], 1.0 / 7.0, 1e-15);
}

TEST(Trigram, ShortPrefixUnchanged) {
  for (const std::vector<TokenId>& prefix : {std::vector<TokenId>{}, std::vector<TokenId>{a}}) {
    std::vector<double> dist = uniform(8);
    const TrigramFilter f = block_repeated_trigram(prefix, dist);
    EXPECT_EQ(f.blocked, 0u);
    EXPECT_EQ(dist, uniform(8));
  }
}

TEST(Trigram, NoMatchUnchanged) {
  const std::vector<TokenId> prefix = {a, b, c, d, a};
  std::vector<double> dist = uniform(8);
  EXPECT_EQ(block_repeated_trigram(prefix, dist).blocked, 0u);
  EXPECT_EQ(dist, uniform(8));
}

TEST(Trigram, WaiverWhenEveryLiveCandidateBlocked) {
  const std::vector<TokenId> prefix = {a, b, c, a, b};
  std::vector<double> dist(8, 0.0);
  dist[c] = 1.0;
  const TrigramFilter f = block_repeated_trigram(prefix, dist);
  EXPECT_TRUE(f.waived);
  EXPECT_EQ(dist[c], 1.0);
}

TEST(Trigram, SentenceBoundariesRespected) {
  // "a b" then EOS then "a b": "b EOS a" style trigrams never form, EOS stays allowed
  const std::vector<TokenId> prefix = {a, b, kEos, a, b};
  std::vector<double> dist = uniform(8);
  const TrigramFilter f = block_repeated_trigram(prefix, dist);
  EXPECT_EQ(f.blocked, 0u);
  const std::vector<TokenId> prefix2 = {a, b, c, kEos, a, b};
  std::vector<double> dist2 = uniform(8);
  EXPECT_EQ(block_repeated_trigram(prefix2, dist2).blocked, 1u);
  EXPECT_EQ(dist2[c], 0.0);
  EXPECT_GT(dist2[kEos], 0.0);
}

TEST(Trigram, RepeatDetection) {
  EXPECT_FALSE(has_repeated_trigram(Paragraph{{{a, b, c}, {a, b, d}}}));
  EXPECT_TRUE(has_repeated_trigram(Paragraph{{{a, b, c}, {d, a, b, c}}}));
  EXPECT_TRUE(has_repeated_trigram(Paragraph{{{a, a, a, a}}}));
  // the boundary splits the only candidate repeat
  EXPECT_FALSE(has_repeated_trigram(Paragraph{{{a, b}, {c, a, b}}}));
}
