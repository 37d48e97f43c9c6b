#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "r2net/tensor.hpp"

namespace r2net {

// Boolean mask over sequence positions; true marks a real (non-pad) token.
using Mask = std::vector<bool>;

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& x, Shape shape);
// x: [n] or [m x n]; y = x W + b with W: [n x k], b: [k].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);

// Adds bias[n] to every row of x[m x n] (or to x[n]).
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
// x times a one-element tensor.
Tensor scale_by(const Tensor& x, const Tensor& factor);

// Gradient at exactly 0 is 0.
Tensor relu(const Tensor& x);
Tensor log(const Tensor& x);
// log(max(x, floor)); zero gradient where the floor is active.
Tensor clamped_log(const Tensor& x, double floor);

// Reductions to a one-element tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor pick(const Tensor& x, std::size_t flat_index);

Tensor softmax(const Tensor& x, std::size_t axis);
// Softmax over the last axis of x[m x n]; masked columns get exactly 0.
Tensor masked_softmax(const Tensor& x, const Mask& keep);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
// Row i of x[m x n] as a [n] tensor.
Tensor row(const Tensor& x, std::size_t index);

// Same-padded cross-correlation over the sequence axis.
// x: [len x d], kernel: [k x d x d_out], optional bias: [d_out].
// Output position t sees input rows t - (k-1)/2 ... t - (k-1)/2 + k - 1;
// rows outside [0, len) read as zero. A kernel wider than the sequence is a
// DegenerateInputError.
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias = {});

// Pool seq[len x c] over rows where valid[t] is true; result [c].
Tensor masked_max_pool(const Tensor& seq, const Mask& valid);
Tensor masked_avg_pool(const Tensor& seq, const Mask& valid);

// Euclidean norm of a - b as a one-element tensor. The gradient divides by
// max(distance, 1e-12) so it stays finite at a == b.
Tensor euclidean_distance(const Tensor& a, const Tensor& b);

}  // namespace r2net
