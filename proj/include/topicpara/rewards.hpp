#pragma once

#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "topicpara/metrics.hpp"
#include "topicpara/tape.hpp"
#include "topicpara/vocab.hpp"

namespace topicpara {

struct LexiconEntry {
  std::string token;
  std::size_t frequency = 0;

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

// The most frequent object words, most frequent first.
class ObjectLexicon {
 public:
  static constexpr std::size_t kDefaultLimit = 1000;

  ObjectLexicon() = default;
  // Throws unless tokens are distinct, frequencies non-increasing and the
  // size within `limit`.
  explicit ObjectLexicon(std::vector<LexiconEntry> entries, std::size_t limit = kDefaultLimit);

  // Keeps candidates that are regular vocabulary tokens, ranked by training
  // frequency (ties lexicographic) and truncated to `limit`.
  static ObjectLexicon rank(const std::vector<std::string>& candidates, const TokenCounts& train_counts,
                            const Vocabulary& vocab, std::size_t limit = kDefaultLimit);
  // Fallback when no candidate list exists: every regular vocabulary token
  // that is not a stopword.
  static ObjectLexicon from_vocabulary(const TokenCounts& train_counts, const Vocabulary& vocab,
                                       std::size_t limit = kDefaultLimit);

  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  bool contains(const std::string& token) const { return members_.count(token) > 0; }

  friend bool operator==(const ObjectLexicon& a, const ObjectLexicon& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<LexiconEntry> entries_;
  std::unordered_set<std::string> members_;
};

bool is_stopword(const std::string& token);

// One token per line with an optional tab-separated frequency (0 if absent).
std::vector<LexiconEntry> read_lexicon_file(const std::filesystem::path& path);
void write_lexicon_file(const std::filesystem::path& path, const ObjectLexicon& lexicon);

// |Q_g ∩ Q_gt| / |Q_gt| over lexicon token types; 1 when the gold paragraph
// mentions no lexicon token.
double coverage_reward(const Tokens& generated, const Tokens& gold, const ObjectLexicon& lexicon);

inline constexpr double kDefaultBeta = 8.0;

struct RewardBundle {
  double coverage = 0.0;  // R^c
  double cider = 0.0;     // R^d
  double combined = 0.0;  // beta * coverage + cider
  double baseline = 0.0;  // combined reward of the greedy decode
};

inline double combine_rewards(double coverage, double cider, double beta) { return beta * coverage + cider; }

// Scores `generated` against the gold paragraph with both rewards.
RewardBundle combined_reward(const Tokens& generated, const Tokens& gold, const ObjectLexicon& lexicon,
                             const CiderD& cider, double beta = kDefaultBeta);

// -(sampled - baseline) * log_prob_sum. Rewards are constants.
Var scst_loss(Var log_prob_sum, double sampled_reward, double baseline_reward);

}  // namespace topicpara
