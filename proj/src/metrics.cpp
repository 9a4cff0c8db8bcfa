#include "topicpara/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "topicpara/error.hpp"

namespace topicpara {

NgramStats count_ngrams(const Tokens& tokens, std::size_t max_n) {
  NgramStats stats;
  stats.counts.resize(max_n);
  stats.length = tokens.size();
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (tokens.size() < n) break;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (std::size_t j = 1; j < n; ++j) {
        key += ' ';
        key += tokens[i + j];
      }
      ++stats.counts[n - 1][key];
    }
  }
  return stats;
}

CiderD::CiderD(const std::vector<std::vector<Tokens>>& corpus_references) : documents_(corpus_references.size()) {
  for (const auto& refs : corpus_references) {
    std::set<std::string> seen;
    for (const auto& ref : refs) {
      const NgramStats stats = count_ngrams(ref, kMaxN);
      for (const auto& level : stats.counts) {
        for (const auto& [key, count] : level) seen.insert(key);
      }
    }
    for (const auto& key : seen) document_frequency_[key] += 1.0;
  }
  log_documents_ = documents_ > 0 ? std::log(static_cast<double>(documents_)) : 0.0;
}

double CiderD::document_frequency(const std::string& ngram) const {
  auto it = document_frequency_.find(ngram);
  return it == document_frequency_.end() ? 0.0 : it->second;
}

CiderD::Vec CiderD::to_vec(const Tokens& tokens) const {
  Vec v;
  const NgramStats stats = count_ngrams(tokens, kMaxN);
  for (std::size_t n = 0; n < kMaxN; ++n) {
    for (const auto& [key, count] : stats.counts[n]) {
      const double df = std::log(std::max(1.0, document_frequency(key)));
      const double w = static_cast<double>(count) * (log_documents_ - df);
      v.weights[n][key] = w;
      v.norm[n] += w * w;
      // the reference scorer measures length in bigrams
      if (n == 1) v.length += static_cast<double>(count);
    }
    v.norm[n] = std::sqrt(v.norm[n]);
  }
  return v;
}

double CiderD::score(const Tokens& candidate, const std::vector<Tokens>& references) const {
  if (references.empty()) throw Error("cider_d: no references");
  if (candidate.empty()) return 0.0;
  const Vec hyp = to_vec(candidate);
  std::vector<std::array<double, kMaxN>> per_ref;
  per_ref.reserve(references.size());
  for (const auto& ref_tokens : references) {
    const Vec ref = to_vec(ref_tokens);
    const double delta = hyp.length - ref.length;
    const double penalty = std::exp(-(delta * delta) / (2 * kSigma * kSigma));
    std::array<double, kMaxN> val{};
    for (std::size_t n = 0; n < kMaxN; ++n) {
      for (const auto& [key, w] : hyp.weights[n]) {
        auto it = ref.weights[n].find(key);
        if (it == ref.weights[n].end()) continue;
        val[n] += std::min(w, it->second) * it->second;
      }
      if (hyp.norm[n] != 0 && ref.norm[n] != 0) val[n] /= hyp.norm[n] * ref.norm[n];
      val[n] *= penalty;
    }
    per_ref.push_back(val);
  }
  // fixed summation order regardless of how references are listed
  std::sort(per_ref.begin(), per_ref.end());
  std::array<double, kMaxN> total{};
  for (const auto& val : per_ref) {
    for (std::size_t n = 0; n < kMaxN; ++n) total[n] += val[n];
  }
  double mean = 0.0;
  for (double t : total) mean += t;
  mean /= static_cast<double>(kMaxN);
  return mean / static_cast<double>(references.size()) * 10.0;
}

std::vector<double> CiderD::score_all(const std::vector<Tokens>& candidates,
                                      const std::vector<std::vector<Tokens>>& references) const {
  if (candidates.size() != references.size()) throw Error("cider_d: candidate and reference counts differ");
  std::vector<double> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) out.push_back(score(candidates[i], references[i]));
  return out;
}

double cider_d_corpus(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  if (candidates.empty()) return 0.0;
  const CiderD scorer(references);
  const std::vector<double> scores = scorer.score_all(candidates, references);
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

double bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  constexpr std::size_t kN = 4;
  constexpr double kTiny = 1e-15;
  constexpr double kSmall = 1e-9;
  if (candidates.size() != references.size()) throw Error("bleu4: candidate and reference counts differ");
  std::array<double, kN> guess{};
  std::array<double, kN> correct{};
  double test_len = 0.0;
  double ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& refs = references[i];
    if (refs.empty()) throw Error("bleu4: no references");
    std::vector<std::map<std::string, std::size_t>> max_counts(kN);
    std::size_t closest = refs.front().size();
    const std::size_t len = candidates[i].size();
    auto distance = [len](std::size_t l) { return l > len ? l - len : len - l; };
    for (const auto& ref : refs) {
      const NgramStats stats = count_ngrams(ref, kN);
      for (std::size_t n = 0; n < kN; ++n) {
        for (const auto& [key, count] : stats.counts[n]) {
          auto& slot = max_counts[n][key];
          slot = std::max(slot, count);
        }
      }
      const std::size_t l = ref.size();
      if (distance(l) < distance(closest) || (distance(l) == distance(closest) && l < closest)) closest = l;
    }
    const NgramStats hyp = count_ngrams(candidates[i], kN);
    for (std::size_t n = 0; n < kN; ++n) {
      guess[n] += static_cast<double>(len >= n + 1 ? len - n : 0);
      for (const auto& [key, count] : hyp.counts[n]) {
        auto it = max_counts[n].find(key);
        if (it != max_counts[n].end()) correct[n] += static_cast<double>(std::min(count, it->second));
      }
    }
    test_len += static_cast<double>(len);
    ref_len += static_cast<double>(closest);
  }
  double product = 1.0;
  for (std::size_t n = 0; n < kN; ++n) product *= (correct[n] + kTiny) / (guess[n] + kSmall);
  double bleu = std::pow(product, 1.0 / static_cast<double>(kN));
  const double ratio = (test_len + kTiny) / (ref_len + kSmall);
  if (ratio < 1.0) bleu *= std::exp(1.0 - 1.0 / ratio);
  return bleu;
}

double bleu4(const Tokens& candidate, const std::vector<Tokens>& references) {
  return bleu4(std::vector<Tokens>{candidate}, std::vector<std::vector<Tokens>>{references});
}

}  // namespace topicpara
