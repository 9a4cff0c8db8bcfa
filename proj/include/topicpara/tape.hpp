#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "topicpara/parameter.hpp"
#include "topicpara/tensor.hpp"

namespace topicpara {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records forward values and backward closures for one computation. A tape is
// rebuilt for every step and confined to one thread.
class Tape {
 public:
  // The closure receives the gradient of the node's output and accumulates
  // into its inputs through Tape::grad().
  using BackwardFn = std::function<void(Tape& tape, const Tensor& out_grad)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var constant(Tensor value);
  // Leaf bound to a trainable parameter; backward() adds into p.grad.
  // The parameter must outlive the tape and keep its address.
  Var param(Parameter& p);
  // Read-only leaf; never receives a gradient.
  Var param(const Parameter& p);

  // Appends an op result. Throws NumericError if the value is not finite.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
  }

  const Tensor& value(std::size_t id) const;
  bool requires_grad(Var v) const;
  // Gradient buffer of v, zero-initialized on first access.
  std::span<double> grad(Var v);
  // Gradient accumulated so far, or nullptr.
  const Tensor* grad_if_any(Var v) const;

  // Seeds d(root)/d(root) = 1 and propagates to every recorded input.
  void backward(Var root);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;

    const Tensor& get() const { return external ? *external : value; }
  };

  void check_owned(Var v) const;

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool grad_enabled_;
};

}  // namespace topicpara
