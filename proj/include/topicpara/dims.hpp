#pragma once

#include <cstddef>

namespace topicpara {

// Every size that shapes a model. Defaults are the full-scale settings.
struct ModelDims {
  std::size_t regions = 50;         // M
  std::size_t raw_dim = 4096;       // D0, detector feature width
  std::size_t embed_dim = 1024;     // D1
  std::size_t filter_width = 26;    // C1
  std::size_t stride = 2;           // C2
  std::size_t topics = 6;           // K, also the sentence cap
  std::size_t hidden = 1000;        // H
  std::size_t attention_dim = 512;  // D3
  std::size_t word_dim = 512;       // D_s
  std::size_t vocab_size = 0;
  std::size_t max_words = 20;       // T_max

  // D2 = (D1 - C1) / C2 + 1
  std::size_t topic_dim() const { return (embed_dim - filter_width) / stride + 1; }
  std::size_t paragraph_input_dim() const { return hidden + embed_dim + word_dim; }
  std::size_t sentence_input_dim() const { return embed_dim + topic_dim() + hidden; }

  // Throws ShapeError on an inconsistent geometry.
  void validate_cae() const;
  void validate() const;
};

}  // namespace topicpara
