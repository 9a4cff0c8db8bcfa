#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "topicpara/rng.hpp"
#include "topicpara/tape.hpp"

namespace topicpara {

// Matrix product. Accepts [m x k]·[k x n] -> [m x n], a rank-1 left operand
// as a row vector ([k]·[k x n] -> [n]) and a rank-1 right operand as a column
// vector ([m x k]·[k] -> [m]).
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);

// Adds a rank-1 `row` to every row of a rank-2 `matrix` (bias add).
Var add_row(Var matrix, Var row);

// Rank-1 softmax with max subtraction.
Var softmax(Var x);

// log softmax(x)[index], with the softmax restricted to entries not listed in
// `excluded`. Returns a single-element tensor.
Var log_prob_of(Var logits, std::size_t index, std::span<const std::size_t> excluded = {});

// Concatenation along `axis` (0 for rank-1 parts; 0 or 1 for rank-2 parts).
// Empty rank-1 parts are skipped.
Var concat(std::span<const Var> parts, std::size_t axis = 0);
Var concat(std::initializer_list<Var> parts, std::size_t axis = 0);

Var slice(Var x, std::size_t offset, std::size_t length);
Var row(Var matrix, std::size_t r);
Var rows(Var matrix, std::size_t begin, std::size_t count);
Var reshape(Var x, Shape shape);

// Column-wise arithmetic mean of a rank-2 tensor: [M x D] -> [D].
Var mean_pool_columns(Var matrix);
Var sum(Var x);
// sum |a - b|; the subgradient at a tie is 0.
Var l1_distance(Var a, Var b);

// Inverted dropout; identity when rate == 0.
Var dropout(Var x, double rate, RngStream& rng);

struct BatchNormResult {
  Var output;
  Tensor batch_mean;
  Tensor batch_var;  // biased
};
// Per-column normalization of [N x D] with batch statistics.
BatchNormResult batch_norm(Var x, Var gamma, Var beta, double eps);
// Per-column normalization with fixed statistics.
Var batch_norm_inference(Var x, const Tensor& mean, const Tensor& var, Var gamma, Var beta, double eps);

}  // namespace topicpara
