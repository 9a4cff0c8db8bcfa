#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "topicpara/checkpoint.hpp"
#include "topicpara/corpus.hpp"
#include "topicpara/error.hpp"
#include "topicpara/evaluate.hpp"
#include "topicpara/features.hpp"
#include "topicpara/synth.hpp"
#include "topicpara/trainer.hpp"

namespace topicpara {

namespace fs = std::filesystem;

namespace {

constexpr const char* kDataEnv = "TOPICPARA_DATA_DIR";

// Input files, by default inside one data directory.
struct DataPaths {
  std::string dir;
  std::string dataset;
  std::string features;
  std::string splits;
  std::string lexicon;

  void add_options(CLI::App* app) {
    app->add_option("--data", dir, std::string("data directory (default $") + kDataEnv + " or .)");
    app->add_option("--dataset", dataset, "paragraph file (default <data>/dataset.jsonl)");
    app->add_option("--features", features, "region feature file (default <data>/features.bin)");
    app->add_option("--splits", splits, "split file (default <data>/splits.json)");
    app->add_option("--lexicon", lexicon, "object lexicon candidates (default <data>/lexicon.txt)");
  }

  fs::path base() const {
    if (!dir.empty()) return dir;
    if (const char* env = std::getenv(kDataEnv); env && *env) return env;
    return ".";
  }
  fs::path dataset_path() const { return dataset.empty() ? base() / "dataset.jsonl" : fs::path(dataset); }
  fs::path features_path() const { return features.empty() ? base() / "features.bin" : fs::path(features); }
  fs::path splits_path() const { return splits.empty() ? base() / "splits.json" : fs::path(splits); }
  fs::path lexicon_path() const { return lexicon.empty() ? base() / "lexicon.txt" : fs::path(lexicon); }
};

std::vector<DatasetRecord> select(const std::vector<DatasetRecord>& records, const std::vector<std::string>& ids) {
  std::map<std::string, const DatasetRecord*> by_id;
  for (const auto& r : records) by_id[r.image_id] = &r;
  std::vector<DatasetRecord> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("no paragraph for image '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

const std::vector<std::string>& split_ids(const SplitSpec& splits, const std::string& name) {
  if (name == "train") return splits.train;
  if (name == "val") return splits.val;
  if (name == "test") return splits.test;
  throw Error("unknown split '" + name + "' (expected train, val or test)");
}

ObjectLexicon make_lexicon(const DataPaths& paths, const TokenCounts& counts, const Vocabulary& vocab,
                           std::ostream& err) {
  const fs::path p = paths.lexicon_path();
  if (fs::exists(p)) {
    std::vector<std::string> candidates;
    for (auto& e : read_lexicon_file(p)) candidates.push_back(std::move(e.token));
    ObjectLexicon lex = ObjectLexicon::rank(candidates, counts, vocab);
    err << "lexicon: " << lex.size() << " object tokens from " << p.string() << "\n";
    return lex;
  }
  ObjectLexicon lex = ObjectLexicon::from_vocabulary(counts, vocab);
  err << "lexicon: no candidate file, " << lex.size() << " non-stopword tokens\n";
  return lex;
}

void apply_overrides(TrainConfig& config, const std::vector<std::string>& sets) {
  nlohmann::json j = to_json(config);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    const std::string value = s.substr(eq + 1);
    try {
      j[key] = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
      j[key] = value;
    }
  }
  j.erase("topic_dim");
  config = config_from_json(j);
}

std::unique_ptr<std::ostream> open_output(const std::string& path, std::ostream& fallback, std::ostream*& sink) {
  if (path.empty() || path == "-") {
    sink = &fallback;
    return nullptr;
  }
  auto f = std::make_unique<std::ofstream>(path);
  if (!*f) throw Error("cannot write " + path);
  sink = f.get();
  return f;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topic-conditioned image paragraph generation"};
  app.name("topicpara");
  app.require_subcommand(1);

  // synth-data
  std::string synth_out;
  std::uint64_t synth_seed = 7;
  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth-data", "write a synthetic dataset");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "random seed");
  synth_cmd->add_option("--images", synth.images, "number of images");
  synth_cmd->add_option("--regions", synth.regions, "regions per image (M)");
  synth_cmd->add_option("--raw-dim", synth.raw_dim, "raw feature width (D0)");
  synth_cmd->add_option("--min-objects", synth.min_objects, "fewest objects per image");
  synth_cmd->add_option("--max-objects", synth.max_objects, "most objects per image");
  synth_cmd->add_option("--noise", synth.noise, "feature noise standard deviation");
  synth_cmd->add_option("--val-fraction", synth.val_fraction, "validation share");
  synth_cmd->add_option("--test-fraction", synth.test_fraction, "test share");

  // build-vocab
  DataPaths vocab_paths;
  std::string vocab_out, vocab_lexicon_out;
  std::size_t vocab_min_count = kDefaultMinCount;
  auto* vocab_cmd = app.add_subcommand("build-vocab", "build the vocabulary from the training split");
  vocab_paths.add_options(vocab_cmd);
  vocab_cmd->add_option("--min-count", vocab_min_count, "minimum token count");
  vocab_cmd->add_option("--out", vocab_out, "vocabulary file")->required();
  vocab_cmd->add_option("--lexicon-out", vocab_lexicon_out, "ranked object lexicon file");

  // train
  DataPaths train_paths;
  std::string train_config, train_out, train_init, train_phase = "1", train_vocab;
  std::optional<std::uint64_t> train_seed;
  std::vector<std::string> train_sets;
  auto* train_cmd = app.add_subcommand("train", "train phase 1, phase 2 or both");
  train_paths.add_options(train_cmd);
  train_cmd->add_option("--config", train_config, "JSON configuration");
  train_cmd->add_option("--phase", train_phase, "1, 2 or both")->check(CLI::IsMember({"1", "2", "both"}));
  train_cmd->add_option("--seed", train_seed, "random seed (overrides the configuration)");
  train_cmd->add_option("--set", train_sets, "configuration override key=value");
  train_cmd->add_option("--vocab", train_vocab, "vocabulary file (default: built from the training split)");
  train_cmd->add_option("--init", train_init, "phase-1 checkpoint to continue from (phase 2)");
  train_cmd->add_option("--out", train_out, "output checkpoint")->required();

  // generate
  DataPaths gen_paths;
  std::string gen_ckpt, gen_out, gen_split;
  std::vector<std::string> gen_images;
  bool gen_greedy = true;
  bool gen_sample = false;
  bool gen_no_block = false;
  std::uint64_t gen_seed = 1;
  auto* gen_cmd = app.add_subcommand("generate", "decode paragraphs as JSON lines");
  gen_paths.add_options(gen_cmd);
  gen_cmd->add_option("--checkpoint", gen_ckpt, "checkpoint")->required();
  gen_cmd->add_option("--image", gen_images, "image id (repeatable; default every image)");
  gen_cmd->add_option("--split", gen_split, "decode the images of this split");
  gen_cmd->add_flag("--greedy", gen_greedy, "greedy decoding (default)");
  gen_cmd->add_flag("--sample", gen_sample, "sample instead of greedy decoding");
  gen_cmd->add_option("--seed", gen_seed, "seed for --sample");
  gen_cmd->add_flag("--no-trigram-block", gen_no_block, "allow repeated trigrams");
  gen_cmd->add_option("--out", gen_out, "output file (default stdout)");

  // evaluate
  DataPaths eval_paths;
  std::string eval_ckpt, eval_out, eval_split = "test";
  bool eval_dump = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "score greedy decodes of a split");
  eval_paths.add_options(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint")->required();
  eval_cmd->add_option("--split", eval_split, "train, val or test");
  eval_cmd->add_flag("--dump", eval_dump, "include per-image outputs in the report");
  eval_cmd->add_option("--out", eval_out, "report file (default stdout)");

  // inspect-topics
  DataPaths insp_paths;
  std::string insp_ckpt, insp_image, insp_out;
  auto* insp_cmd = app.add_subcommand("inspect-topics", "dump topics, stop probabilities and attention maps");
  insp_paths.add_options(insp_cmd);
  insp_cmd->add_option("--checkpoint", insp_ckpt, "checkpoint")->required();
  insp_cmd->add_option("--image", insp_image, "image id")->required();
  insp_cmd->add_option("--out", insp_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*synth_cmd) {
      err << "seed: " << synth_seed << "\n";
      RngStream rng(synth_seed);
      const SynthDataset ds = synthesize_dataset(rng, synth);
      fs::create_directories(synth_out);
      const fs::path dir(synth_out);
      write_dataset(dir / "dataset.jsonl", ds.records);
      save_features(dir / "features.bin", ds.features);
      write_splits(dir / "splits.json", ds.splits);
      std::ofstream lex(dir / "lexicon.txt");
      for (const auto& t : ds.object_tokens) lex << t << '\n';
      if (!lex) throw Error("cannot write " + (dir / "lexicon.txt").string());
      err << "wrote " << ds.records.size() << " images to " << dir.string() << "\n";
      return 0;
    }

    if (*vocab_cmd) {
      const auto records = read_dataset(vocab_paths.dataset_path());
      const SplitSpec splits = read_splits(vocab_paths.splits_path());
      validate_splits(splits, records);
      const auto train = select(records, splits.train);
      const TokenCounts counts = count_tokens(train);
      const Vocabulary vocab = build_vocab(counts, vocab_min_count);
      write_vocab(vocab_out, vocab);
      err << "vocabulary: " << vocab.size() << " tokens (min count " << vocab_min_count << ")\n";
      if (!vocab_lexicon_out.empty()) {
        write_lexicon_file(vocab_lexicon_out, make_lexicon(vocab_paths, counts, vocab, err));
      }
      return 0;
    }

    if (*train_cmd) {
      const auto log = [&err](const std::string& line) { err << line << "\n"; };
      std::optional<Checkpoint> ckpt;
      const auto records = read_dataset(train_paths.dataset_path());
      const SplitSpec splits = read_splits(train_paths.splits_path());
      validate_splits(splits, records);

      if (train_phase == "2") {
        if (train_init.empty()) throw Error("train --phase 2 needs --init <phase-1 checkpoint>");
        if (!train_config.empty() || train_seed || !train_sets.empty()) {
          throw Error("phase 2 uses the configuration stored in the checkpoint; drop --config, --seed and --set");
        }
        ckpt = load_checkpoint(train_init);
        err << "seed: " << ckpt->config.seed << "\n";
      } else {
        TrainConfig config = train_config.empty() ? TrainConfig{} : load_config(train_config);
        apply_overrides(config, train_sets);
        if (train_seed) config.seed = *train_seed;
        err << "seed: " << config.seed << "\n";
        const auto train = select(records, splits.train);
        const TokenCounts counts = count_tokens(train, config.dims.topics, config.dims.max_words);
        Vocabulary vocab = train_vocab.empty() ? build_vocab(counts, config.min_count) : read_vocab(train_vocab);
        ObjectLexicon lexicon = make_lexicon(train_paths, counts, vocab, err);
        ckpt = Checkpoint::create(config, std::move(vocab), std::move(lexicon));
      }

      const ModelDims& dims = ckpt->config.dims;
      const FeatureMap features = load_features(train_paths.features_path(), dims.regions, dims.raw_dim);
      TrainingData data;
      data.train = make_examples(splits.train, records, features, ckpt->vocab, dims);
      data.val = make_examples(splits.val, records, features, ckpt->vocab, dims);
      err << "train " << data.train.size() << " images, val " << data.val.size() << ", vocabulary "
          << ckpt->vocab.size() << "\n";

      if (train_phase == "1" || train_phase == "both") {
        Checkpoint best = train_phase_one(*ckpt, data, log);
        ckpt = std::move(best);
      }
      if (train_phase == "2" || train_phase == "both") {
        Checkpoint best = train_phase_two(*ckpt, data, log);
        ckpt = std::move(best);
      }
      save_checkpoint(train_out, *ckpt);
      err << "saved " << train_out << "\n";
      return 0;
    }

    if (*gen_cmd) {
      const Checkpoint ckpt = load_checkpoint(gen_ckpt);
      const ModelDims& dims = ckpt.config.dims;
      const FeatureMap features = load_features(gen_paths.features_path(), dims.regions, dims.raw_dim);
      std::vector<std::string> ids = gen_images;
      if (!gen_split.empty()) {
        const SplitSpec splits = read_splits(gen_paths.splits_path());
        const auto& s = split_ids(splits, gen_split);
        ids.insert(ids.end(), s.begin(), s.end());
      }
      if (ids.empty()) {
        for (const auto& [id, r] : features) ids.push_back(id);
      }
      std::ostream* sink = nullptr;
      auto file = open_output(gen_out, out, sink);
      RngStream rng(gen_seed);
      if (gen_sample) err << "seed: " << gen_seed << "\n";
      for (const auto& id : ids) {
        auto it = features.find(id);
        if (it == features.end()) throw Error("missing features for image '" + id + "'");
        ImageOutput o;
        if (gen_sample) {
          Tape tape(false);
          const ModelVars vars = bind(tape, ckpt.model);
          DecodeOptions options;
          options.mode = DecodeMode::sample;
          options.rng = &rng;
          DecodeResult r = decode_paragraph(vars, embed_regions(vars.cae, it->second), options);
          o = {id, std::move(r.paragraph), std::move(r.stop_probs), false};
        } else {
          o = generate_paragraph(ckpt.model, it->second, !gen_no_block);
        }
        *sink << output_json(o, ckpt.vocab).dump() << '\n';
      }
      return 0;
    }

    if (*eval_cmd) {
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const ModelDims& dims = ckpt.config.dims;
      const auto records = read_dataset(eval_paths.dataset_path());
      const SplitSpec splits = read_splits(eval_paths.splits_path());
      const FeatureMap features = load_features(eval_paths.features_path(), dims.regions, dims.raw_dim);
      const auto examples = make_examples(split_ids(splits, eval_split), records, features, ckpt.vocab, dims);
      const EvalReport report = evaluate(ckpt.model, ckpt.vocab, ckpt.lexicon, examples, ckpt.config.block_trigrams);
      std::ostream* sink = nullptr;
      auto file = open_output(eval_out, out, sink);
      *sink << report_json(report, ckpt.vocab, eval_dump).dump(2) << '\n';
      return 0;
    }

    if (*insp_cmd) {
      const Checkpoint ckpt = load_checkpoint(insp_ckpt);
      const ModelDims& dims = ckpt.config.dims;
      const FeatureMap features = load_features(insp_paths.features_path(), dims.regions, dims.raw_dim);
      auto it = features.find(insp_image);
      if (it == features.end()) throw Error("missing features for image '" + insp_image + "'");
      Tape tape(false);
      const ModelVars vars = bind(tape, ckpt.model);
      DecodeOptions options;
      options.block_trigrams = ckpt.config.block_trigrams;
      options.record_attention = true;
      const DecodeResult r = decode_paragraph(vars, embed_regions(vars.cae, it->second), options);
      nlohmann::json topics = nlohmann::json::array();
      for (std::size_t k = 0; k < r.topics.rows(); ++k) {
        auto row = r.topics.row(k);
        topics.push_back(std::vector<double>(row.begin(), row.end()));
      }
      const nlohmann::json j = {{"image_id", insp_image},
                                {"topics", topics},
                                {"stop_probs", r.stop_probs},
                                {"sentences", sentence_strings(r.paragraph, ckpt.vocab)},
                                {"attention", r.attention}};
      std::ostream* sink = nullptr;
      auto file = open_output(insp_out, out, sink);
      *sink << j.dump(2) << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace topicpara
