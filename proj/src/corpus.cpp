#include "topicpara/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <json.hpp>

#include "topicpara/error.hpp"

namespace topicpara {

namespace {

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::vector<Tokens> tokenize(std::string_view text, std::size_t max_sentences, std::size_t max_words) {
  std::vector<Tokens> sentences;
  Tokens current;
  std::string word;
  auto end_word = [&] {
    if (!word.empty()) current.push_back(std::move(word));
    word.clear();
  };
  auto end_sentence = [&] {
    end_word();
    if (!current.empty()) sentences.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (is_sentence_end(c)) {
      end_sentence();
    } else if (is_space(c)) {
      end_word();
    } else if (!is_ascii_punct(c)) {
      word.push_back(lower(c));
    }
  }
  end_sentence();
  if (sentences.empty()) throw Error("tokenize: empty text");
  if (sentences.size() > max_sentences) sentences.resize(max_sentences);
  for (auto& s : sentences) {
    if (s.size() > max_words) s.resize(max_words);
  }
  return sentences;
}

std::string render(const std::vector<Tokens>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    if (!out.empty()) out += ' ';
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ' ';
      out += s[i];
    }
    out += '.';
  }
  return out;
}

std::string to_json_line(const DatasetRecord& record) {
  nlohmann::json j = {{"image_id", record.image_id}, {"paragraph", record.paragraph}};
  return j.dump();
}

DatasetRecord parse_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("dataset: invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("image_id") || !j.contains("paragraph") || !j["image_id"].is_string() ||
      !j["paragraph"].is_string()) {
    throw FormatError("dataset: record needs string fields image_id and paragraph");
  }
  return {j["image_id"].get<std::string>(), j["paragraph"].get<std::string>()};
}

std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("dataset: cannot open " + path.string());
  std::vector<DatasetRecord> records;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DatasetRecord r;
    try {
      r = parse_json_line(line);
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(r.image_id).second) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": duplicate image_id '" + r.image_id + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("dataset: cannot write " + path.string());
  for (const auto& r : records) out << to_json_line(r) << '\n';
  if (!out) throw Error("dataset: write failed for " + path.string());
}

void validate_splits(const SplitSpec& splits, const std::vector<DatasetRecord>& records) {
  std::set<std::string> seen;
  for (const auto* part : {&splits.train, &splits.val, &splits.test}) {
    for (const auto& id : *part) {
      if (!seen.insert(id).second) throw Error("splits: image '" + id + "' appears more than once");
    }
  }
  std::set<std::string> dataset;
  for (const auto& r : records) dataset.insert(r.image_id);
  for (const auto& id : seen) {
    if (!dataset.count(id)) throw Error("splits: image '" + id + "' is not in the dataset");
  }
  for (const auto& id : dataset) {
    if (!seen.count(id)) throw Error("splits: image '" + id + "' is in no split");
  }
}

SplitSpec read_splits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("splits: cannot open " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    SplitSpec s;
    s.train = j.at("train").get<std::vector<std::string>>();
    s.val = j.at("val").get<std::vector<std::string>>();
    s.test = j.at("test").get<std::vector<std::string>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("splits: " + path.string() + ": " + e.what());
  }
}

void write_splits(const std::filesystem::path& path, const SplitSpec& splits) {
  std::ofstream out(path);
  if (!out) throw Error("splits: cannot write " + path.string());
  const nlohmann::json j = {{"train", splits.train}, {"val", splits.val}, {"test", splits.test}};
  out << j.dump(1) << '\n';
}

TokenCounts count_tokens(const std::vector<DatasetRecord>& records, std::size_t max_sentences, std::size_t max_words) {
  TokenCounts counts;
  for (const auto& r : records) {
    for (const auto& s : tokenize(r.paragraph, max_sentences, max_words)) {
      for (const auto& t : s) ++counts[t];
    }
  }
  return counts;
}

Vocabulary build_vocab(const TokenCounts& counts, std::size_t min_count) {
  if (counts.empty()) throw Error("build_vocab: no training tokens");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, count] : kept) tokens.push_back(std::move(token));
  return Vocabulary(tokens);
}

Vocabulary build_vocab(const std::vector<DatasetRecord>& train, std::size_t min_count, std::size_t max_sentences,
                       std::size_t max_words) {
  if (train.empty()) throw Error("build_vocab: empty training set");
  return build_vocab(count_tokens(train, max_sentences, max_words), min_count);
}

Vocabulary read_vocab(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("vocab: cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return Vocabulary(tokens);
}

void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw Error("vocab: cannot write " + path.string());
  for (const auto& t : vocab.regular_tokens()) out << t << '\n';
}

}  // namespace topicpara
