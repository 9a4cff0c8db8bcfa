#include "topicpara/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "topicpara/error.hpp"
#include "topicpara/ops.hpp"

namespace topicpara {

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",     "about", "above",  "across", "after", "against", "all",     "along",  "also",  "am",    "an",
      "and",   "any",   "are",    "around", "as",    "at",      "away",    "back",   "be",    "been",  "behind",
      "being", "below", "beside", "between", "both", "but",     "by",      "can",    "could", "did",   "do",
      "does",  "down",  "during", "each",   "few",   "for",     "from",    "front",  "had",   "has",   "have",
      "he",    "her",   "here",   "him",    "his",   "how",     "i",       "if",     "in",    "into",  "is",
      "it",    "its",   "just",   "left",   "like",  "many",    "more",    "most",   "near",  "nearby", "next",
      "no",    "not",   "of",     "off",    "on",    "one",     "only",    "onto",   "or",    "other", "our",
      "out",   "over",  "right",  "same",   "she",   "side",    "so",      "some",   "stands", "such", "than",
      "that",  "the",   "their",  "them",   "then",  "there",   "these",   "they",   "this",  "those", "through",
      "to",    "too",   "top",    "two",    "under", "up",      "very",    "was",    "we",    "were",  "what",
      "when",  "where", "which",  "while",  "who",   "with",    "within",  "you",    "see",   "seen",  "picture",
      "image", "photo", "shown",  "sitting", "standing", "three", "four",  "several"};
  return words;
}

ObjectLexicon rank_entries(std::vector<LexiconEntry> entries, std::size_t limit) {
  std::sort(entries.begin(), entries.end(), [](const LexiconEntry& a, const LexiconEntry& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.token < b.token;
  });
  if (entries.size() > limit) entries.resize(limit);
  return ObjectLexicon(std::move(entries), limit);
}

std::size_t count_of(const TokenCounts& counts, const std::string& token) {
  auto it = counts.find(token);
  return it == counts.end() ? 0 : it->second;
}

}  // namespace

bool is_stopword(const std::string& token) { return stopwords().count(token) > 0; }

ObjectLexicon::ObjectLexicon(std::vector<LexiconEntry> entries, std::size_t limit) : entries_(std::move(entries)) {
  if (entries_.size() > limit) {
    throw Error("lexicon: " + std::to_string(entries_.size()) + " entries exceed the limit of " +
                std::to_string(limit));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].token.empty()) throw Error("lexicon: empty token");
    if (!members_.insert(entries_[i].token).second) throw Error("lexicon: duplicate token '" + entries_[i].token + "'");
    if (i > 0 && entries_[i].frequency > entries_[i - 1].frequency) {
      throw Error("lexicon: frequencies must be non-increasing at '" + entries_[i].token + "'");
    }
  }
}

ObjectLexicon ObjectLexicon::rank(const std::vector<std::string>& candidates, const TokenCounts& train_counts,
                                  const Vocabulary& vocab, std::size_t limit) {
  std::set<std::string> unique;
  std::vector<LexiconEntry> entries;
  for (const auto& token : candidates) {
    if (!unique.insert(token).second) continue;
    if (!vocab.contains(token) || vocab.id(token) < kSpecialCount) continue;
    entries.push_back({token, count_of(train_counts, token)});
  }
  return rank_entries(std::move(entries), limit);
}

ObjectLexicon ObjectLexicon::from_vocabulary(const TokenCounts& train_counts, const Vocabulary& vocab,
                                             std::size_t limit) {
  std::vector<LexiconEntry> entries;
  for (const auto& token : vocab.regular_tokens()) {
    if (is_stopword(token)) continue;
    entries.push_back({token, count_of(train_counts, token)});
  }
  return rank_entries(std::move(entries), limit);
}

std::vector<LexiconEntry> read_lexicon_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("lexicon: cannot open " + path.string());
  std::vector<LexiconEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    LexiconEntry e;
    const auto tab = line.find('\t');
    e.token = line.substr(0, tab);
    if (tab != std::string::npos) {
      const std::string freq = line.substr(tab + 1);
      try {
        std::size_t used = 0;
        e.frequency = std::stoull(freq, &used);
        if (used != freq.size()) throw std::invalid_argument(freq);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad frequency '" + freq + "'");
      }
    }
    if (e.token.empty()) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty token");
    out.push_back(std::move(e));
  }
  return out;
}

void write_lexicon_file(const std::filesystem::path& path, const ObjectLexicon& lexicon) {
  std::ofstream out(path);
  if (!out) throw Error("lexicon: cannot write " + path.string());
  for (const auto& e : lexicon.entries()) out << e.token << '\t' << e.frequency << '\n';
  if (!out) throw Error("lexicon: write failed for " + path.string());
}

double coverage_reward(const Tokens& generated, const Tokens& gold, const ObjectLexicon& lexicon) {
  if (lexicon.empty()) throw Error("coverage_reward: empty lexicon");
  std::set<std::string> required;
  for (const auto& t : gold) {
    if (lexicon.contains(t)) required.insert(t);
  }
  if (required.empty()) return 1.0;
  std::set<std::string> produced(generated.begin(), generated.end());
  std::size_t hit = 0;
  for (const auto& t : required) hit += produced.count(t);
  return static_cast<double>(hit) / static_cast<double>(required.size());
}

RewardBundle combined_reward(const Tokens& generated, const Tokens& gold, const ObjectLexicon& lexicon,
                             const CiderD& cider, double beta) {
  if (!(beta >= 0.0)) throw Error("combined_reward: beta must be non-negative");
  RewardBundle r;
  r.coverage = coverage_reward(generated, gold, lexicon);
  r.cider = cider.score(generated, {gold});
  r.combined = combine_rewards(r.coverage, r.cider, beta);
  return r;
}

Var scst_loss(Var log_prob_sum, double sampled_reward, double baseline_reward) {
  if (log_prob_sum.size() != 1) throw ShapeError("scst_loss: log-probability sum must be a single value");
  if (!std::isfinite(log_prob_sum.value()[0])) throw NumericError("scst_loss: non-finite log-probability");
  if (!std::isfinite(sampled_reward) || !std::isfinite(baseline_reward)) {
    throw NumericError("scst_loss: non-finite reward");
  }
  return scale(log_prob_sum, -(sampled_reward - baseline_reward));
}

}  // namespace topicpara
