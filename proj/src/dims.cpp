#include "topicpara/dims.hpp"

#include <string>

#include "topicpara/error.hpp"

namespace topicpara {

void ModelDims::validate_cae() const {
  if (regions == 0 || raw_dim == 0 || embed_dim == 0 || filter_width == 0 || stride == 0 || topics == 0) {
    throw ShapeError("model dims: every CAE size must be positive");
  }
  if (filter_width > embed_dim) {
    throw ShapeError("model dims: filter width " + std::to_string(filter_width) + " exceeds embed dim " +
                     std::to_string(embed_dim));
  }
  if ((embed_dim - filter_width) % stride != 0) {
    throw ShapeError("model dims: (D1 - C1) = " + std::to_string(embed_dim - filter_width) +
                     " is not divisible by stride " + std::to_string(stride));
  }
}

void ModelDims::validate() const {
  validate_cae();
  if (hidden == 0 || attention_dim == 0 || word_dim == 0 || max_words == 0) {
    throw ShapeError("model dims: generator sizes must be positive");
  }
  if (vocab_size < 5) throw ShapeError("model dims: vocabulary needs at least one regular token");
}

}  // namespace topicpara
