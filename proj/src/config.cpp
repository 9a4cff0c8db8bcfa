#include "topicpara/config.hpp"

#include <fstream>
#include <set>

#include "topicpara/error.hpp"

namespace topicpara {

void TrainConfig::validate() const {
  dims.validate_cae();
  if (dims.hidden == 0 || dims.attention_dim == 0 || dims.word_dim == 0 || dims.max_words == 0) {
    throw Error("config: generator sizes must be positive");
  }
  if (!(lr_phase1 > 0) || !(lr_phase2 > 0)) throw Error("config: learning rates must be positive");
  if (!(beta >= 0)) throw Error("config: beta must be non-negative");
  if (!(cider_weight >= 0)) throw Error("config: cider_weight must be non-negative");
  if (!(dropout >= 0 && dropout < 1)) throw Error("config: dropout must lie in [0, 1)");
  if (!(lambda_rec >= 0) || !(lambda_stop >= 0)) throw Error("config: loss weights must be non-negative");
  if (batch_size == 0) throw Error("config: batch size must be positive");
  if (min_count == 0) throw Error("config: min_count must be positive");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"regions", c.dims.regions},
      {"raw_dim", c.dims.raw_dim},
      {"embed_dim", c.dims.embed_dim},
      {"topic_dim", c.dims.topic_dim()},
      {"filter_width", c.dims.filter_width},
      {"stride", c.dims.stride},
      {"topics", c.dims.topics},
      {"hidden", c.dims.hidden},
      {"attention_dim", c.dims.attention_dim},
      {"word_dim", c.dims.word_dim},
      {"vocab_size", c.dims.vocab_size},
      {"max_words", c.dims.max_words},
      {"beta", c.beta},
      {"cider_weight", c.cider_weight},
      {"lr_phase1", c.lr_phase1},
      {"lr_phase2", c.lr_phase2},
      {"min_count", c.min_count},
      {"dropout", c.dropout},
      {"seed", c.seed},
      {"batch_size", c.batch_size},
      {"epochs_phase1", c.epochs_phase1},
      {"epochs_phase2", c.epochs_phase2},
      {"max_steps_phase1", c.max_steps_phase1},
      {"max_steps_phase2", c.max_steps_phase2},
      {"patience", c.patience},
      {"lambda_rec", c.lambda_rec},
      {"lambda_stop", c.lambda_stop},
      {"batch_norm", c.batch_norm},
      {"block_trigrams", c.block_trigrams},
  };
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw FormatError("config: expected a JSON object");
  static const std::set<std::string> known = {
      "regions",       "raw_dim",        "embed_dim",        "topic_dim",        "filter_width", "stride",
      "topics",        "hidden",         "attention_dim",    "word_dim",         "vocab_size",   "max_words",
      "beta",          "lr_phase1",      "lr_phase2",        "min_count",        "dropout",      "seed",
      "batch_size",    "epochs_phase1",  "epochs_phase2",    "max_steps_phase1", "max_steps_phase2",
      "patience",      "lambda_rec",     "lambda_stop",      "batch_norm",       "block_trigrams", "cider_weight"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw FormatError("config: unknown key '" + item.key() + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("regions", c.dims.regions);
    get("raw_dim", c.dims.raw_dim);
    get("embed_dim", c.dims.embed_dim);
    get("filter_width", c.dims.filter_width);
    get("stride", c.dims.stride);
    get("topics", c.dims.topics);
    get("hidden", c.dims.hidden);
    get("attention_dim", c.dims.attention_dim);
    get("word_dim", c.dims.word_dim);
    get("vocab_size", c.dims.vocab_size);
    get("max_words", c.dims.max_words);
    get("beta", c.beta);
    get("cider_weight", c.cider_weight);
    get("lr_phase1", c.lr_phase1);
    get("lr_phase2", c.lr_phase2);
    get("min_count", c.min_count);
    get("dropout", c.dropout);
    get("seed", c.seed);
    get("batch_size", c.batch_size);
    get("epochs_phase1", c.epochs_phase1);
    get("epochs_phase2", c.epochs_phase2);
    get("max_steps_phase1", c.max_steps_phase1);
    get("max_steps_phase2", c.max_steps_phase2);
    get("patience", c.patience);
    get("lambda_rec", c.lambda_rec);
    get("lambda_stop", c.lambda_stop);
    get("batch_norm", c.batch_norm);
    get("block_trigrams", c.block_trigrams);
    c.validate();
    if (j.contains("topic_dim") && j.at("topic_dim").get<std::size_t>() != c.dims.topic_dim()) {
      throw Error("config: topic_dim " + std::to_string(j.at("topic_dim").get<std::size_t>()) +
                  " disagrees with (D1 - C1) / C2 + 1 = " + std::to_string(c.dims.topic_dim()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const TrainConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error("config: cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace topicpara
