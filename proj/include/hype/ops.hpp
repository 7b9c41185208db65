#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hype/tensor.hpp"

// Differentiable primitives. Every op validates shapes and throws
// DimensionError naming the offending shapes.
namespace hype::ops {

// [m x k] @ [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Batched product: a [b x m x k] @ b [b x k x n], or b [b x n x k] if transpose_b.
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

// x [..., k] @ w [k x n] + bias [n] -> [..., n]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

// Numerically stable softmax along `axis` (max subtraction).
Tensor softmax(const Tensor& x, std::size_t axis);

// Normalizes over the last axis, then applies gain * xhat + bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-12);

// Exact x * Phi(x).
Tensor gelu(const Tensor& x);

// Mean negative log-likelihood of integer labels under softmax(logits).
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

// Mean squared error; `target` is treated as a constant.
Tensor mse(const Tensor& pred, const Tensor& target);

// Rows of table [v x d] selected by index -> [ids.size() x d]. Used for
// embedding lookup and for gathering masked positions.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);

// h [b x s x d] -> [b x d] slice at sequence position `position`.
Tensor select_position(const Tensor& h, std::size_t position);

// [b x s x d] <-> [(b*heads) x s x (d/heads)]
Tensor split_heads(const Tensor& x, std::size_t heads);
Tensor merge_heads(const Tensor& x, std::size_t heads);

// Adds a large negative constant to attention scores [(b*heads) x s x s]
// wherever the key position is padding. key_valid is [b*s], 1 = real token.
Tensor mask_keys(const Tensor& scores, std::span<const std::uint8_t> key_valid, std::size_t heads);

}  // namespace hype::ops
