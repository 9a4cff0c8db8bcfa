#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "topicpara/parameter.hpp"

namespace topicpara {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are keyed by parameter name so the state
// survives rebinding and checkpoint reloads.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  const AdamOptions& options() const noexcept { return options_; }
  void set_lr(double lr) { options_.lr = lr; }
  std::uint64_t steps() const noexcept { return steps_; }

  // Applies one update from the accumulated grads of the trainable parameters.
  void step(const std::vector<Parameter*>& params);

  // Moment access for checkpointing.
  const std::map<std::string, Tensor>& first_moments() const noexcept { return m_; }
  const std::map<std::string, Tensor>& second_moments() const noexcept { return v_; }
  void restore(std::uint64_t steps, std::map<std::string, Tensor> m, std::map<std::string, Tensor> v);

  friend bool operator==(const Adam& a, const Adam& b) {
    return a.steps_ == b.steps_ && a.m_ == b.m_ && a.v_ == b.v_ && a.options_.lr == b.options_.lr &&
           a.options_.beta1 == b.options_.beta1 && a.options_.beta2 == b.options_.beta2 &&
           a.options_.eps == b.options_.eps;
  }

 private:
  AdamOptions options_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

}  // namespace topicpara
