#pragma once

#include <string>
#include <vector>

#include "topicpara/rng.hpp"
#include "topicpara/tensor.hpp"

namespace topicpara {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value when trainable
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string name, Tensor value, bool trainable = true);

  void zero_grad();
};

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
void init_uniform(Parameter& p, std::size_t fan_in, RngStream& rng);

// Throws if two parameters share a name.
void require_unique_names(const std::vector<Parameter*>& params);

}  // namespace topicpara
