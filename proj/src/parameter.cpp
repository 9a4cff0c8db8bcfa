#include "topicpara/parameter.hpp"

#include <cmath>
#include <set>

#include "topicpara/error.hpp"

namespace topicpara {

Parameter::Parameter(std::string n, Tensor v, bool t) : name(std::move(n)), value(std::move(v)), trainable(t) {
  if (trainable) grad = Tensor(value.shape());
}

void Parameter::zero_grad() {
  if (trainable) {
    if (grad.shape() != value.shape()) grad = Tensor(value.shape());
    grad.fill(0.0);
  }
}

void init_uniform(Parameter& p, std::size_t fan_in, RngStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (double& v : p.value.values()) v = rng.uniform(-bound, bound);
}

void require_unique_names(const std::vector<Parameter*>& params) {
  std::set<std::string> seen;
  for (const Parameter* p : params) {
    if (!seen.insert(p->name).second) throw Error("duplicate parameter name: " + p->name);
  }
}

}  // namespace topicpara
