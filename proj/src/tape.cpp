#include "topicpara/tape.hpp"

#include "topicpara/error.hpp"

namespace topicpara {

const Tensor& Var::value() const {
  if (!tape_) throw Error("use of an unbound Var");
  return tape_->value(id_);
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite value");
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  if (!p.value.all_finite()) throw NumericError("parameter " + p.name + " holds a non-finite value");
  Node node;
  node.external = &p.value;
  node.requires_grad = grad_enabled_ && p.trainable;
  node.param = node.requires_grad ? &p : nullptr;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.external = &p.value;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this) throw Error("Var belongs to a different tape");
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(std::string(op) + ": produced a non-finite value");
  bool needs = false;
  for (Var in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id()].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = grad_enabled_ && needs;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const { return nodes_.at(id).get(); }

bool Tape::requires_grad(Var v) const {
  check_owned(v);
  return nodes_[v.id()].requires_grad;
}

std::span<double> Tape::grad(Var v) {
  check_owned(v);
  Node& node = nodes_[v.id()];
  if (!node.has_grad) {
    node.grad = Tensor(node.get().shape());
    node.has_grad = true;
  }
  return node.grad.values();
}

const Tensor* Tape::grad_if_any(Var v) const {
  check_owned(v);
  const Node& node = nodes_[v.id()];
  return node.has_grad ? &node.grad : nullptr;
}

void Tape::backward(Var root) {
  check_owned(root);
  if (root.size() != 1) throw ShapeError("backward: root must be a single-element tensor");
  if (!nodes_[root.id()].requires_grad) return;
  grad(root)[0] += 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad) continue;
    if (!node.grad.all_finite()) throw NumericError("backward: non-finite gradient");
    if (node.backward) node.backward(*this, node.grad);
  }
  for (Node& node : nodes_) {
    if (node.param && node.has_grad) {
      if (node.param->grad.shape() != node.param->value.shape()) node.param->zero_grad();
      auto dst = node.param->grad.values();
      auto src = node.grad.values();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

}  // namespace topicpara
