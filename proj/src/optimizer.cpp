#include "topicpara/optimizer.hpp"

#include <cmath>

#include "topicpara/error.hpp"

namespace topicpara {

void Adam::step(const std::vector<Parameter*>& params) {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    if (p->grad.shape() != p->value.shape()) p->zero_grad();
    if (!p->grad.all_finite()) throw NumericError("adam: non-finite gradient in " + p->name);
    auto [mit, m_new] = m_.try_emplace(p->name, p->value.shape());
    auto [vit, v_new] = v_.try_emplace(p->name, p->value.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    if (m.shape() != p->value.shape() || v.shape() != p->value.shape()) {
      throw ShapeError("adam: moment shape mismatch for " + p->name);
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p->value[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
    if (!p->value.all_finite()) throw NumericError("adam: update produced non-finite values in " + p->name);
  }
}

void Adam::restore(std::uint64_t steps, std::map<std::string, Tensor> m, std::map<std::string, Tensor> v) {
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace topicpara
