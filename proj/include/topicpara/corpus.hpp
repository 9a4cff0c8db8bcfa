#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topicpara/metrics.hpp"
#include "topicpara/vocab.hpp"

namespace topicpara {

inline constexpr std::size_t kDefaultMaxSentences = 6;
inline constexpr std::size_t kDefaultMaxWords = 20;
inline constexpr std::size_t kDefaultMinCount = 4;

// Lowercases, splits sentences on . ! ? and words on whitespace, strips ASCII
// punctuation from every word, drops empty sentences and applies the caps.
// Throws when no token survives.
std::vector<Tokens> tokenize(std::string_view text, std::size_t max_sentences = kDefaultMaxSentences,
                             std::size_t max_words = kDefaultMaxWords);

// "w w w. w w." from tokenized sentences.
std::string render(const std::vector<Tokens>& sentences);

struct DatasetRecord {
  std::string image_id;
  std::string paragraph;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

// JSON lines, one {"image_id", "paragraph"} object per line.
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);
std::string to_json_line(const DatasetRecord& record);
DatasetRecord parse_json_line(std::string_view line);

struct SplitSpec {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

// Throws unless the splits are disjoint and together cover exactly the
// dataset's image ids.
void validate_splits(const SplitSpec& splits, const std::vector<DatasetRecord>& records);
SplitSpec read_splits(const std::filesystem::path& path);
void write_splits(const std::filesystem::path& path, const SplitSpec& splits);

// Token frequencies over the tokenized paragraphs.
TokenCounts count_tokens(const std::vector<DatasetRecord>& records, std::size_t max_sentences = kDefaultMaxSentences,
                         std::size_t max_words = kDefaultMaxWords);

// Tokens seen at least `min_count` times; ids by descending count, then
// lexicographically. Throws on an empty count table.
Vocabulary build_vocab(const TokenCounts& counts, std::size_t min_count = kDefaultMinCount);
Vocabulary build_vocab(const std::vector<DatasetRecord>& train, std::size_t min_count = kDefaultMinCount,
                       std::size_t max_sentences = kDefaultMaxSentences, std::size_t max_words = kDefaultMaxWords);

// Vocabulary file: one regular token per line, in id order.
Vocabulary read_vocab(const std::filesystem::path& path);
void write_vocab(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace topicpara
