#pragma once

#include "ro2o/autodiff/tensor.hpp"

#include <span>
#include <vector>

// Differentiable free functions over Tensor. Every op checks shapes eagerly and
// throws DimensionError on mismatch.
namespace ro2o::ad {

[[nodiscard]] Tensor detach(const Tensor& x);

[[nodiscard]] Tensor matmul(const Tensor& a, const Tensor& b);
/// x * w + b with b a 1 x out row broadcast over the batch.
[[nodiscard]] Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

[[nodiscard]] Tensor add(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor sub(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor mul(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor div(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor scale(const Tensor& a, double s);
[[nodiscard]] Tensor add_scalar(const Tensor& a, double s);
[[nodiscard]] Tensor neg(const Tensor& a);

[[nodiscard]] Tensor tanh(const Tensor& x);
/// Plain-matrix tanh used by graph-free evaluation.
[[nodiscard]] Matrix tanh_values(const Matrix& x);
[[nodiscard]] Tensor relu(const Tensor& x);
[[nodiscard]] Tensor exp(const Tensor& x);
[[nodiscard]] Tensor log(const Tensor& x);
[[nodiscard]] Tensor square(const Tensor& x);
/// sqrt with a zero subgradient at 0.
[[nodiscard]] Tensor sqrt(const Tensor& x);
[[nodiscard]] Tensor softplus(const Tensor& x);
/// Hard clamp; gradient passes only strictly inside (lo, hi).
[[nodiscard]] Tensor clamp(const Tensor& x, double lo, double hi);

[[nodiscard]] Tensor sum(const Tensor& x);
[[nodiscard]] Tensor mean(const Tensor& x);
/// Per-row reductions over columns, producing rows x 1.
[[nodiscard]] Tensor row_sum(const Tensor& x);
[[nodiscard]] Tensor row_mean(const Tensor& x);
[[nodiscard]] Tensor row_max(const Tensor& x);
[[nodiscard]] Tensor row_min(const Tensor& x);
/// rows x 1 -> rows x n.
[[nodiscard]] Tensor broadcast_cols(const Tensor& x, Index n);

[[nodiscard]] Tensor concat_cols(std::span<const Tensor> parts);
[[nodiscard]] Tensor concat_cols(const Tensor& a, const Tensor& b);
[[nodiscard]] Tensor slice_cols(const Tensor& x, Index start, Index count);

}  // namespace ro2o::ad
