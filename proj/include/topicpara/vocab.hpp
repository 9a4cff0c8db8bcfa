#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace topicpara {

using TokenId = std::uint32_t;
using TokenCounts = std::map<std::string, std::size_t>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr std::size_t kSpecialCount = 4;

// Dense token ids. 0..3 are PAD, BOS, EOS, UNK; regular tokens follow in the
// order they were given.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& regular_tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId id(std::string_view token) const;  // UNK when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::vector<std::string> regular_tokens() const;

  std::vector<TokenId> encode(const std::vector<std::string>& words) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Up to K sentences of token ids, EOS not included.
struct Paragraph {
  std::vector<std::vector<TokenId>> sentences;

  std::size_t token_count() const;
  friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

Paragraph encode_paragraph(const std::vector<std::vector<std::string>>& sentences, const Vocabulary& vocab);
std::vector<std::string> sentence_strings(const Paragraph& paragraph, const Vocabulary& vocab);
// The whole paragraph as one token sequence (used by the scorers).
std::vector<std::string> flatten_tokens(const Paragraph& paragraph, const Vocabulary& vocab);

}  // namespace topicpara
