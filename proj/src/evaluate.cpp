#include "topicpara/evaluate.hpp"

#include "topicpara/error.hpp"
#include "topicpara/metrics.hpp"

namespace topicpara {

ImageOutput generate_paragraph(const Model& model, const RawRegionSet& regions, bool block_trigrams) {
  Tape tape(false);
  const ModelVars vars = bind(tape, model);
  Var v = embed_regions(vars.cae, regions);
  DecodeOptions options;
  options.block_trigrams = block_trigrams;
  DecodeResult r = decode_paragraph(vars, v, options);
  return {regions.image_id, std::move(r.paragraph), std::move(r.stop_probs), r.trigram_waived};
}

std::vector<ImageOutput> generate_paragraphs(const Model& model, std::span<const Example> examples,
                                             bool block_trigrams) {
  std::vector<ImageOutput> out;
  out.reserve(examples.size());
  for (const Example& e : examples) {
    if (!e.regions) throw Error("generate: example without regions");
    out.push_back(generate_paragraph(model, *e.regions, block_trigrams));
  }
  return out;
}

EvalReport score_outputs(std::vector<ImageOutput> outputs, std::span<const Paragraph> gold, const Vocabulary& vocab,
                         const ObjectLexicon& lexicon) {
  if (outputs.size() != gold.size()) throw Error("evaluate: output and reference counts differ");
  EvalReport report;
  if (outputs.empty()) return report;
  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
  double coverage = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    candidates.push_back(flatten_tokens(outputs[i].paragraph, vocab));
    references.push_back({flatten_tokens(gold[i], vocab)});
    coverage += coverage_reward(candidates.back(), references.back().front(), lexicon);
    ++report.sentence_histogram[outputs[i].paragraph.sentences.size()];
  }
  report.cider = cider_d_corpus(candidates, references);
  report.bleu4 = bleu4(candidates, references);
  report.coverage_mean = coverage / static_cast<double>(outputs.size());
  report.outputs = std::move(outputs);
  return report;
}

EvalReport evaluate(const Model& model, const Vocabulary& vocab, const ObjectLexicon& lexicon,
                    std::span<const Example> examples, bool block_trigrams) {
  std::vector<Paragraph> gold;
  for (const Example& e : examples) gold.push_back(e.gold);
  return score_outputs(generate_paragraphs(model, examples, block_trigrams), gold, vocab, lexicon);
}

nlohmann::json output_json(const ImageOutput& output, const Vocabulary& vocab) {
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& s : output.paragraph.sentences) ids.push_back(s);
  return {{"image_id", output.image_id},
          {"sentences", sentence_strings(output.paragraph, vocab)},
          {"token_ids", ids},
          {"stop_probs", output.stop_probs}};
}

nlohmann::json report_json(const EvalReport& report, const Vocabulary& vocab, bool include_outputs) {
  nlohmann::json histogram = nlohmann::json::object();
  for (const auto& [count, images] : report.sentence_histogram) histogram[std::to_string(count)] = images;
  nlohmann::json j = {{"CIDEr", report.cider},
                      {"BLEU4", report.bleu4},
                      {"coverage_mean", report.coverage_mean},
                      {"sentence_count_histogram", histogram},
                      {"images", report.outputs.size()}};
  if (include_outputs) {
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : report.outputs) outs.push_back(output_json(o, vocab));
    j["outputs"] = outs;
  }
  return j;
}

}  // namespace topicpara
