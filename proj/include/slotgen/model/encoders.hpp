// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "slotgen/num/ops.hpp"
#include "slotgen/num/optim.hpp"

namespace slotgen::model {

using num::Tensor;
using num::Var;

/// GRU weights with the three gates packed as column blocks [update | reset | candidate].
struct GruParams {
  Var input;  // d_in x 3d_h
  Var recur;  // d_h x 3d_h
  Var bias;   // 1 x 3d_h

  std::size_t input_dim() const { return input.rows(); }
  std::size_t hidden_dim() const { return recur.rows(); }
};

GruParams make_gru(num::ParameterSet& params, const std::string& prefix, std::size_t d_in, std::size_t d_h,
                   num::Rng& rng);

/// One recurrence step for a 1 x d_in input and 1 x d_h state.
Var gru_cell(const Var& x, const Var& h_prev, const GruParams& p);

/// Runs the GRU over the rows of `inputs` from a zero state and returns the
/// T x d_h stack of states (reversed order when `backward` is set, so row t is
/// always the state at token t).
Var gru_sequence(const Var& inputs, const GruParams& p, bool backward = false);

struct UtteranceEncoding {
  Var token_states;  // T x 2d_h
  Var final;         // 1 x 2d_h: forward state at T, backward state at 1
};

/// Bidirectional GRU over a T x d_e embedding matrix. Throws InputError for T = 0.
UtteranceEncoding encode_utterance(const Var& embeds, const GruParams& fwd, const GruParams& bwd);

struct AttentionResult {
  Var weights;  // T x T, rows sum to 1
  Var output;   // T x width
};

/// softmax(H H^T / sqrt(width)) H with optional inverted dropout on the output.
AttentionResult self_attention(const Var& h, double dropout_rate = 0.0, bool training = false,
                               num::Rng* rng = nullptr);
inline AttentionResult slot_attention(const Var& h, double dropout_rate = 0.0, bool training = false,
                                      num::Rng* rng = nullptr) {
  return self_attention(h, dropout_rate, training, rng);
}

inline constexpr std::size_t kMaxImages = 5;

/// ReLU(concat(features padded with zero rows to 5) W + b). `features` is
/// k x d_img with k <= 5, or an empty tensor for a turn without images.
/// `weight` is 5 d_img x d_h. Throws InputError when k > 5.
Var encode_images(const Tensor& features, const Var& weight, const Var& bias);

/// Context GRU over per-turn inputs; returns the N x d_h stack of states.
/// Throws InputError for an empty sequence.
Var encode_context(const std::vector<Var>& turn_inputs, const GruParams& p);

struct KBEncoding {
  Var query_final;   // 1 x d_h
  Var entity_final;  // 1 x d_h
  Var joint;         // 1 x 2d_h
  Var weights;       // 2 x 2
  Var attended;      // 1 x 2d_h, self-attended rows laid side by side
};

/// Two GRUs over query and entity embeddings, then self-attention over the
/// two final states.
KBEncoding encode_kb(const Var& query_embeds, const Var& entity_embeds, const GruParams& q_gru,
                     const GruParams& e_gru);
/// All-zero encoding used when no knowledge-base record applies.
KBEncoding empty_kb(std::size_t d_h);

struct TransformerBlockParams {
  std::size_t heads = 4;
  Var wq, wk, wv, wo;       // d x d
  Var ln1_gain, ln1_bias;   // 1 x d
  Var ln2_gain, ln2_bias;   // 1 x d
  Var ff1, ff1_bias;        // d x 4d, 1 x 4d
  Var ff2, ff2_bias;        // 4d x d, 1 x d

  std::size_t dim() const { return wq.rows(); }
};

/// Throws ConfigError when `d` is not divisible by `heads`.
TransformerBlockParams make_transformer_block(num::ParameterSet& params, const std::string& prefix, std::size_t d,
                                              std::size_t heads, num::Rng& rng);

/// Pre-norm block: x + MHA(LN(x)), then x + FFN(LN(x)). When `head_weights`
/// is given, the per-head attention matrices are appended to it.
Var transformer_block(const Var& h, const TransformerBlockParams& p, std::vector<Tensor>* head_weights = nullptr);

/// T x d sinusoidal position table.
Tensor sinusoidal_positions(std::size_t length, std::size_t dim);

}  // namespace slotgen::model
