#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "topicpara/model.hpp"
#include "topicpara/rewards.hpp"

namespace topicpara {

struct ImageOutput {
  std::string image_id;
  Paragraph paragraph;
  std::vector<double> stop_probs;
  bool trigram_waived = false;
};

// Greedy decode of one region set with eval-mode batch normalization.
ImageOutput generate_paragraph(const Model& model, const RawRegionSet& regions, bool block_trigrams = true);
std::vector<ImageOutput> generate_paragraphs(const Model& model, std::span<const Example> examples,
                                             bool block_trigrams = true);

struct EvalReport {
  double cider = 0.0;  // document frequencies from the evaluated references
  double bleu4 = 0.0;
  double coverage_mean = 0.0;
  std::map<std::size_t, std::size_t> sentence_histogram;  // sentence count -> images
  std::vector<ImageOutput> outputs;
};

// Scores `outputs` against the gold paragraphs of the same images.
EvalReport score_outputs(std::vector<ImageOutput> outputs, std::span<const Paragraph> gold, const Vocabulary& vocab,
                         const ObjectLexicon& lexicon);

EvalReport evaluate(const Model& model, const Vocabulary& vocab, const ObjectLexicon& lexicon,
                    std::span<const Example> examples, bool block_trigrams = true);

// {"image_id", "sentences", "token_ids", "stop_probs"}
nlohmann::json output_json(const ImageOutput& output, const Vocabulary& vocab);
// {"CIDEr", "BLEU4", "coverage_mean", "sentence_count_histogram", ["outputs"]}
nlohmann::json report_json(const EvalReport& report, const Vocabulary& vocab, bool include_outputs);

}  // namespace topicpara
