// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slotgen/num/autodiff.hpp"
#include "slotgen/num/random.hpp"

namespace slotgen::num {

// Differentiable operations. All operate on rank-2 tensors; a vector is a
// 1 x n row. Shape violations raise DimensionError naming both shapes.

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

/// a + b. `b` may be a 1 x n row broadcast over the rows of an m x n `a`;
/// no other broadcast is accepted.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);

/// Softmax along `axis` (0 = down columns, 1 = along rows). Subtracts the
/// slice maximum before exponentiating.
Var softmax(const Var& a, int axis = 1);

Var sum(const Var& a);
/// Column-wise mean over rows: m x n -> 1 x n.
Var mean_rows(const Var& a);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var row(const Var& a, std::size_t index);

/// Row gather from an embedding table.
Var embedding(const Var& table, std::span<const std::int64_t> ids);

/// Row-wise layer normalisation with learned gain and bias (both 1 x n).
Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps = 1e-5);

/// Inverted dropout: zeroes each element with probability `rate` and scales
/// survivors by 1/(1-rate). Identity when `training` is false or rate is 0.
Var dropout(const Var& a, double rate, bool training, Rng& rng);

/// -log softmax(logits)[target] for a 1 x V logits row.
Var cross_entropy(const Var& logits, std::size_t target);
/// Sum over rows of -log softmax(logits[i])[targets[i]].
Var cross_entropy_rows(const Var& logits, std::span<const std::size_t> targets);

/// Fused GRU update for one time step.
///
///   z  = sigmoid(x Wz + h Uz + bz)
///   r  = sigmoid(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r * h) Uh + bh)
///   h' = (1 - z) * h + z * h~
///
/// `input_proj` is x [Wz|Wr|Wh] + [bz|br|bh] (1 x 3d) computed by the caller,
/// which lets sequence encoders project all inputs with one matmul. `recur`
/// is [Uz|Ur|Uh] (d x 3d).
Var gru_step(const Var& input_proj, const Var& h_prev, const Var& recur);

/// Value-only helpers.
Tensor softmax_values(const Tensor& a, int axis = 1);

}  // namespace slotgen::num
