#include "topicpara/trigram.hpp"

#include <array>
#include <set>

namespace topicpara {

TrigramFilter block_repeated_trigram(std::span<const TokenId> prefix, std::span<double> distribution,
                                     TokenId boundary) {
  TrigramFilter result;
  const std::size_t n = prefix.size();
  if (n < 2) return result;
  const TokenId x = prefix[n - 2];
  const TokenId y = prefix[n - 1];
  if (x == boundary || y == boundary) return result;

  std::set<TokenId> completions;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (prefix[i] == x && prefix[i + 1] == y && prefix[i + 2] != boundary) completions.insert(prefix[i + 2]);
  }
  if (completions.empty()) return result;

  double live_mass = 0.0;
  double blocked_mass = 0.0;
  std::size_t blocked = 0;
  for (std::size_t z = 0; z < distribution.size(); ++z) {
    if (distribution[z] <= 0.0) continue;
    live_mass += distribution[z];
    if (z != boundary && completions.count(static_cast<TokenId>(z))) {
      blocked_mass += distribution[z];
      ++blocked;
    }
  }
  if (blocked == 0) return result;
  if (blocked_mass >= live_mass) {
    result.waived = true;
    return result;
  }
  const double keep = live_mass - blocked_mass;
  for (std::size_t z = 0; z < distribution.size(); ++z) {
    if (distribution[z] <= 0.0) continue;
    if (z != boundary && completions.count(static_cast<TokenId>(z))) {
      distribution[z] = 0.0;
    } else {
      distribution[z] = distribution[z] / keep * live_mass;
    }
  }
  result.blocked = blocked;
  return result;
}

bool has_repeated_trigram(const Paragraph& paragraph) {
  std::set<std::array<TokenId, 3>> seen;
  for (const auto& s : paragraph.sentences) {
    for (std::size_t i = 0; i + 2 < s.size(); ++i) {
      if (!seen.insert({s[i], s[i + 1], s[i + 2]}).second) return true;
    }
  }
  return false;
}

}  // namespace topicpara
