#pragma once

// Differentiable tensor operations. Each op validates shapes (ShapeError naming
// the op and both shapes) and records itself on the thread's GradTape when any
// input requires a gradient and recording is enabled.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cael/tensor.hpp"

namespace cael {

// Forward multiply-accumulate count of matmul, linear and conv2d on this thread.
std::uint64_t& mac_counter();

// [m,k] x [k,n] -> [m,n]
// [B,m,k] x [B,k,n] -> [B,m,n]
// [...,k] x [k,n] -> [...,n]   (leading axes flattened into rows)
Tensor matmul(const Tensor& a, const Tensor& b);

// x [..., in] * weight [in, out] + bias [out]. bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// x [B,C,H,W], weight [O,C,kh,kw], bias [O] (may be undefined); zero padding.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding);

// Elementwise a + b. b must match a's shape or a trailing suffix of it
// (broadcast over the leading axes).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::span<const std::size_t> sizes);

// Copies; element order is unchanged.
Tensor reshape(const Tensor& x, Shape shape);
// Swaps two axes, materialising the result.
Tensor transpose(const Tensor& x, std::size_t axis0, std::size_t axis1);

// Along the last axis, max-subtracted.
Tensor softmax(const Tensor& x);
// Along the last axis; gamma/beta [dim].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-8);
// Exact erf form.
Tensor gelu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Mean over one axis, which is removed from the shape.
Tensor mean_axis(const Tensor& x, std::size_t axis);

// x [B,C,G1,G2] -> [B, (G1/p)*(G2/p), C*p*p], patches in row-major grid
// order, each flattened as (channel, row, col).
Tensor patchify(const Tensor& x, std::size_t patch);

// x [1, ...] -> [count, ...]
Tensor repeat_leading(const Tensor& x, std::size_t count);

// Mean over the batch of -log softmax(logits)[label]. logits [B,C].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace cael
