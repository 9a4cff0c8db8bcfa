#pragma once

#include <map>
#include <string>
#include <vector>

namespace topicpara {

using Tokens = std::vector<std::string>;

// n-gram counts keyed by the space-joined n-gram; counts[n - 1] holds n-grams.
struct NgramStats {
  std::vector<std::map<std::string, std::size_t>> counts;
  std::size_t length = 0;  // token count
};

NgramStats count_ngrams(const Tokens& tokens, std::size_t max_n = 4);

// CIDEr-D scorer compatible with the COCO caption evaluation code, including
// its conventions: document frequency counts an n-gram once per image over
// the union of that image's references, the length penalty compares bigram
// counts, scores are scaled by 10 and averaged over references.
class CiderD {
 public:
  static constexpr std::size_t kMaxN = 4;
  static constexpr double kSigma = 6.0;

  // One entry per image: that image's reference token sequences.
  explicit CiderD(const std::vector<std::vector<Tokens>>& corpus_references);

  double score(const Tokens& candidate, const std::vector<Tokens>& references) const;
  // Per-image scores for parallel candidate/reference lists.
  std::vector<double> score_all(const std::vector<Tokens>& candidates,
                                const std::vector<std::vector<Tokens>>& references) const;

  std::size_t document_count() const noexcept { return documents_; }
  double document_frequency(const std::string& ngram) const;

 private:
  struct Vec {
    std::map<std::string, double> weights[kMaxN];
    double norm[kMaxN] = {0, 0, 0, 0};
    double length = 0;
  };
  Vec to_vec(const Tokens& tokens) const;

  std::map<std::string, double> document_frequency_;
  std::size_t documents_ = 0;
  double log_documents_ = 0.0;
};

// Mean per-image CIDEr-D with document frequencies taken from the scored set.
double cider_d_corpus(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);

// Corpus-level BLEU-4 with clipped counts, the closest reference length
// (shorter on ties) and the COCO code's additive smoothing.
double bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);
double bleu4(const Tokens& candidate, const std::vector<Tokens>& references);

}  // namespace topicpara
