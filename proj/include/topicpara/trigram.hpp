#pragma once

#include <span>

#include "topicpara/vocab.hpp"

namespace topicpara {

struct TrigramFilter {
  std::size_t blocked = 0;  // candidates zeroed
  bool waived = false;      // every live candidate was blocked, so none were
};

// Zeroes every candidate that would complete a trigram already present in
// `prefix`, then renormalizes. `prefix` is the paragraph so far with sentence
// boundaries marked by `boundary`; trigrams never span a boundary and the
// boundary token itself is never blocked. If all candidates with non-zero
// probability would be blocked the distribution is left unchanged.
TrigramFilter block_repeated_trigram(std::span<const TokenId> prefix, std::span<double> distribution,
                                     TokenId boundary = kEos);

// True when some within-sentence trigram occurs twice anywhere in the paragraph.
bool has_repeated_trigram(const Paragraph& paragraph);

}  // namespace topicpara
