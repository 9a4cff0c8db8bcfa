#include "topicpara/vocab.hpp"

#include "topicpara/error.hpp"

namespace topicpara {

namespace {
const char* const kSpecialNames[kSpecialCount] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& regular_tokens) {
  for (const char* name : kSpecialNames) {
    index_.emplace(name, static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(name);
  }
  for (const std::string& t : regular_tokens) {
    if (t.empty()) throw Error("vocabulary: empty token");
    if (!index_.emplace(t, static_cast<TokenId>(tokens_.size())).second) {
      throw Error("vocabulary: duplicate token '" + t + "'");
    }
    tokens_.push_back(t);
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw Error("vocabulary: id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return {tokens_.begin() + kSpecialCount, tokens_.end()};
}

std::vector<TokenId> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<TokenId> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(id(w));
  return ids;
}

std::size_t Paragraph::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

Paragraph encode_paragraph(const std::vector<std::vector<std::string>>& sentences, const Vocabulary& vocab) {
  Paragraph p;
  for (const auto& s : sentences) p.sentences.push_back(vocab.encode(s));
  return p;
}

std::vector<std::string> sentence_strings(const Paragraph& paragraph, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (const auto& s : paragraph.sentences) {
    std::string text;
    for (TokenId id : s) {
      if (!text.empty()) text += ' ';
      text += vocab.token(id);
    }
    out.push_back(std::move(text));
  }
  return out;
}

std::vector<std::string> flatten_tokens(const Paragraph& paragraph, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (const auto& s : paragraph.sentences) {
    for (TokenId id : s) out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace topicpara
