#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tbps/core/tensor.hpp"

// Differentiable operations. Every op records a backward rule when at least
// one input requires a gradient; otherwise it is a plain computation.
//
// Rank-1 tensors of length n are treated as 1 x n rows by the row-wise ops.

namespace tbps::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T without materialising the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Elementwise sum. `b` may also be a single row broadcast over the rows of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor scale(const Tensor& a, double c);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
/// Exact (erf based) GELU.
Tensor gelu(const Tensor& a);

Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);

/// Row-wise softmax with max subtraction. When `key_mask` is non-empty it has
/// one entry per column; columns with mask 0 get probability exactly 0.
Tensor softmax_rows(const Tensor& a, std::span<const std::uint8_t> key_mask = {});
Tensor log_softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
/// Row-wise x / max(||x||, eps).
Tensor l2_normalize_rows(const Tensor& a, double eps = 1e-12);

/// Rows of `table` selected by `ids` (embedding lookup).
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
/// Flat elements of `a` at `indices`, as a rank-1 tensor.
Tensor take(const Tensor& a, std::span<const std::size_t> indices);
/// Diagonal of a square matrix as a rank-1 tensor.
Tensor diagonal(const Tensor& a);
/// Sum over each row, as a rank-1 tensor of length rows().
Tensor row_sums(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

}  // namespace tbps::ops
